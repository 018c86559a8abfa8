#pragma once

#include <stdexcept>
#include <string>

namespace masgame {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DuplicateAgentId : Error {
  using Error::Error;
};
struct LinkNotPresent : Error {
  using Error::Error;
};
struct BudgetExceedsLinks : Error {
  using Error::Error;
};
struct InfeasibleStart : Error {
  using Error::Error;
};
struct ParseError : Error {
  using Error::Error;
};
struct ValidationError : Error {
  using Error::Error;
};

}  // namespace masgame
