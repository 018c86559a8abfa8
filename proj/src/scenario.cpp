#include "scenario.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

namespace masgame {

using nlohmann::json;

namespace {

int log_level_from_env() {
  const char* env = std::getenv("MASGAME_LOG");
  if (!env) return 2;  // warn by default
  const std::string v(env);
  if (v == "debug") return 0;
  if (v == "info") return 1;
  if (v == "warn") return 2;
  if (v == "error") return 3;
  return 2;
}

const char* level_name(int level) {
  switch (level) {
    case 0:
      return "debug";
    case 1:
      return "info";
    case 2:
      return "warn";
    default:
      return "error";
  }
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

struct Violations {
  std::vector<std::string> items;
  void add(const std::string& s) { items.push_back(s); }
  void require(bool ok, const std::string& s) {
    if (!ok) add(s);
  }
  void raise_if_any() const {
    if (items.empty()) return;
    std::string msg = "scenario validation failed:";
    for (const auto& s : items) msg += "\n  - " + s;
    throw ValidationError(msg);
  }
};

const json* find(const json& j, const char* key) {
  auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

double get_num(const json& j, const char* key, double fallback, bool required, Violations& v,
               const std::string& ctx) {
  const json* f = find(j, key);
  if (!f) {
    if (required) v.add(ctx + "." + key + " is required");
    return fallback;
  }
  if (!f->is_number()) {
    v.add(ctx + "." + key + " must be a number");
    return fallback;
  }
  return f->get<double>();
}

PlayerParams parse_player(const json& j, Player who, Violations& v, const std::string& ctx) {
  PlayerParams p;
  p.player = who;
  p.rho_intra = get_num(j, "rho_intra", 1.0, true, v, ctx);
  p.rho_cross = get_num(j, "rho_cross", 1.0, true, v, ctx);
  p.d_max = get_num(j, "d_max", 0.2, true, v, ctx);
  p.period = static_cast<int>(get_num(j, "period", 1, true, v, ctx));
  v.require(p.rho_intra > 0.0, ctx + ".rho_intra must be positive");
  v.require(p.rho_cross > 0.0, ctx + ".rho_cross must be positive");
  v.require(p.d_max >= 0.0, ctx + ".d_max must be nonnegative");
  v.require(p.period >= 1, ctx + ".period must be at least 1");
  return p;
}

std::vector<Link> parse_link_array(const json& arr, int n, Violations& v, const std::string& ctx) {
  std::vector<Link> out;
  if (!arr.is_array()) {
    v.add(ctx + " must be an array of [i,j] pairs");
    return out;
  }
  for (const auto& item : arr) {
    if (!item.is_array() || item.size() != 2 || !item[0].is_number_integer() ||
        !item[1].is_number_integer()) {
      v.add(ctx + " entries must be [i,j] integer pairs");
      continue;
    }
    const int i = item[0].get<int>();
    const int j = item[1].get<int>();
    if (i == j || i < 1 || j < 1 || i > n || j > n) {
      v.add(ctx + " pair (" + std::to_string(i) + "," + std::to_string(j) + ") references invalid agents");
      continue;
    }
    out.emplace_back(i, j);
  }
  return out;
}

json position_json(const Vec3& p) { return json::array({p.x, p.y, p.z}); }

}  // namespace

bool log_enabled(int level) {
  static const int threshold = log_level_from_env();
  return level >= threshold;
}

void log_line(int level, const std::string& msg) {
  if (!log_enabled(level)) return;
  std::cerr << "[masgame " << level_name(level) << "] " << msg << "\n";
}

ScenarioConfig parse_scenario(const std::string& text, const std::string& name) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(name + ": " + e.what());
  }

  Violations v;
  ScenarioConfig cfg;
  cfg.name = name;
  if (const json* f = find(j, "schema_version")) {
    if (f->is_number_integer())
      cfg.schema_version = f->get<int>();
    else
      v.add("schema_version must be an integer");
  }
  if (cfg.schema_version != 1) v.add("unsupported schema_version (expected 1)");

  // Agents.
  const json* agents = find(j, "agents");
  if (!agents || !agents->is_array() || agents->empty()) {
    v.add("agents is required and must be a non-empty array");
  } else {
    for (const auto& item : *agents) {
      AgentState a;
      if (const json* f = find(item, "id"); f && f->is_number_integer())
        a.id = f->get<int>();
      else
        v.add("agent entries need an integer id");
      if (const json* f = find(item, "layer"); f && f->is_number_integer()) {
        const int layer = f->get<int>();
        if (layer == 1 || layer == 2)
          a.layer = layer == 1 ? Layer::L1 : Layer::L2;
        else
          v.add("agent " + std::to_string(a.id) + ": layer must be 1 or 2");
      } else {
        v.add("agent " + std::to_string(a.id) + ": layer is required");
      }
      if (const json* f = find(item, "position");
          f && f->is_array() && f->size() == 3 && (*f)[0].is_number() && (*f)[1].is_number() &&
          (*f)[2].is_number()) {
        a.position = Vec3((*f)[0].get<double>(), (*f)[1].get<double>(), (*f)[2].get<double>());
        if (!std::isfinite(a.position.x) || !std::isfinite(a.position.y) ||
            !std::isfinite(a.position.z))
          v.add("agent " + std::to_string(a.id) + ": position must be finite");
      } else {
        v.add("agent " + std::to_string(a.id) + ": position must be a [x,y,z] array");
      }
      cfg.agents.push_back(a);
    }
    std::vector<AgentState> probe = cfg.agents;
    try {
      validate_agents(probe);
    } catch (const Error& e) {
      v.add(e.what());
    }
  }
  const int n = static_cast<int>(cfg.agents.size());

  // Weights.
  if (const json* w = find(j, "weights")) {
    cfg.weights.delta = get_num(*w, "delta", 0.1, true, v, "weights");
    cfg.weights.r_sat = get_num(*w, "r_sat", 2.0, true, v, "weights");
    cfg.weights.r_cut = get_num(*w, "r_cut", 6.0, true, v, "weights");
    if (const json* f = find(*w, "arg_convention")) {
      const std::string conv = f->is_string() ? f->get<std::string>() : "";
      if (conv == "squared_distance")
        cfg.weights.arg_convention = ArgConvention::SquaredDistance;
      else if (conv == "distance")
        cfg.weights.arg_convention = ArgConvention::Distance;
      else
        v.add("weights.arg_convention must be 'squared_distance' or 'distance'");
    }
    v.require(cfg.weights.delta > 0.0 && cfg.weights.delta < 1.0, "weights.delta must be in (0,1)");
    v.require(cfg.weights.r_sat > 0.0, "weights.r_sat must be positive");
    v.require(cfg.weights.r_cut > cfg.weights.r_sat, "weights.r_cut must exceed r_sat");
  } else {
    v.add("weights is required");
  }

  // Players.
  if (const json* players = find(j, "players")) {
    if (const json* p = find(*players, "p1"))
      cfg.p1 = parse_player(*p, Player::P1, v, "players.p1");
    else
      v.add("players.p1 is required");
    if (const json* p = find(*players, "p2"))
      cfg.p2 = parse_player(*p, Player::P2, v, "players.p2");
    else
      v.add("players.p2 is required");
  } else {
    v.add("players is required");
  }

  // Engine (all defaulted).
  cfg.engine.period_1 = cfg.p1.period;
  cfg.engine.period_2 = cfg.p2.period;
  if (const json* e = find(j, "engine")) {
    cfg.engine.kappa = get_num(*e, "kappa", 1e-6, false, v, "engine");
    cfg.engine.max_steps = static_cast<int>(get_num(*e, "max_steps", 200, false, v, "engine"));
    if (const json* f = find(*e, "anticipate_attacks")) {
      if (f->is_boolean())
        cfg.engine.anticipate_attacks = f->get<bool>();
      else
        v.add("engine.anticipate_attacks must be a boolean");
    }
    if (const json* f = find(*e, "planar_layers")) {
      if (f->is_boolean())
        cfg.engine.planar_layers = f->get<bool>();
      else
        v.add("engine.planar_layers must be a boolean");
    }
    if (const json* f = find(*e, "seed")) {
      if (f->is_number_unsigned() || f->is_number_integer())
        cfg.engine.seed = f->get<uint64_t>();
      else
        v.add("engine.seed must be an integer");
    }
    v.require(cfg.engine.kappa > 0.0, "engine.kappa must be positive");
    v.require(cfg.engine.max_steps >= 1, "engine.max_steps must be at least 1");
  }

  // Attack.
  if (const json* a = find(j, "attack")) {
    cfg.attack.budget_psi = static_cast<int>(get_num(*a, "budget_psi", 1, true, v, "attack"));
    v.require(cfg.attack.budget_psi >= 0, "attack.budget_psi must be nonnegative");
    if (const json* f = find(*a, "candidate_links")) {
      if (f->is_string()) {
        const std::string s = f->get<std::string>();
        if (s == "all")
          cfg.attack.filter = CandidateFilter::All;
        else if (s == "inter_layer_only")
          cfg.attack.filter = CandidateFilter::InterLayerOnly;
        else
          v.add("attack.candidate_links must be 'all', 'inter_layer_only' or an explicit pair list");
      } else if (f->is_array()) {
        cfg.attack.filter = CandidateFilter::Explicit;
        cfg.attack.explicit_links = parse_link_array(*f, n, v, "attack.candidate_links");
      } else {
        v.add("attack.candidate_links must be 'all', 'inter_layer_only' or an explicit pair list");
      }
    }
    if (const json* f = find(*a, "secure_links")) {
      for (const Link& l : parse_link_array(*f, n, v, "attack.secure_links"))
        cfg.attack.secure_links.insert(l);
    }
  } else {
    v.add("attack is required");
  }

  // Spoofing (optional).
  if (const json* s = find(j, "spoofing")) {
    SpoofSpec spec;
    if (const json* f = find(*s, "target")) {
      if (f->is_string() && f->get<std::string>() == "max_degree") {
        spec.explicit_target.reset();
      } else if (f->is_number_integer()) {
        const int id = f->get<int>();
        if (id < 1 || id > n)
          v.add("spoofing.target references an invalid agent");
        else
          spec.explicit_target = id;
      } else {
        v.add("spoofing.target must be 'max_degree' or an agent id");
      }
    } else {
      v.add("spoofing.target is required when spoofing is present");
    }
    spec.start_step = static_cast<int>(get_num(*s, "start_step", 1, true, v, "spoofing"));
    spec.duration = static_cast<int>(get_num(*s, "duration", 1, true, v, "spoofing"));
    spec.disturbance_range = get_num(*s, "disturbance_range", 0.2, false, v, "spoofing");
    v.require(spec.start_step >= 1, "spoofing.start_step must be at least 1");
    v.require(spec.duration >= 1, "spoofing.duration must be at least 1");
    v.require(spec.disturbance_range >= 0.0, "spoofing.disturbance_range must be nonnegative");
    cfg.spoofing = spec;
  }

  v.raise_if_any();
  return cfg;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open scenario file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), path.stem().string());
}

std::string serialize_scenario(const ScenarioConfig& cfg) {
  json j;
  j["schema_version"] = cfg.schema_version;
  j["agents"] = json::array();
  for (const auto& a : cfg.agents) {
    j["agents"].push_back({{"id", a.id},
                           {"layer", a.layer == Layer::L1 ? 1 : 2},
                           {"position", position_json(a.position)}});
  }
  j["weights"] = {
      {"delta", cfg.weights.delta},
      {"r_sat", cfg.weights.r_sat},
      {"r_cut", cfg.weights.r_cut},
      {"arg_convention", cfg.weights.arg_convention == ArgConvention::SquaredDistance
                             ? "squared_distance"
                             : "distance"}};
  auto player_json = [](const PlayerParams& p) {
    return json{{"rho_intra", p.rho_intra},
                {"rho_cross", p.rho_cross},
                {"d_max", p.d_max},
                {"period", p.period}};
  };
  j["players"] = {{"p1", player_json(cfg.p1)}, {"p2", player_json(cfg.p2)}};
  j["engine"] = {{"kappa", cfg.engine.kappa},
                 {"max_steps", cfg.engine.max_steps},
                 {"anticipate_attacks", cfg.engine.anticipate_attacks},
                 {"planar_layers", cfg.engine.planar_layers},
                 {"seed", cfg.engine.seed}};
  json attack;
  attack["budget_psi"] = cfg.attack.budget_psi;
  switch (cfg.attack.filter) {
    case CandidateFilter::All:
      attack["candidate_links"] = "all";
      break;
    case CandidateFilter::InterLayerOnly:
      attack["candidate_links"] = "inter_layer_only";
      break;
    case CandidateFilter::Explicit: {
      json arr = json::array();
      for (const Link& l : cfg.attack.explicit_links) arr.push_back({l.i, l.j});
      attack["candidate_links"] = arr;
      break;
    }
  }
  json secure = json::array();
  for (const Link& l : cfg.attack.secure_links) secure.push_back({l.i, l.j});
  attack["secure_links"] = secure;
  j["attack"] = attack;
  if (cfg.spoofing) {
    json s;
    if (cfg.spoofing->explicit_target)
      s["target"] = *cfg.spoofing->explicit_target;
    else
      s["target"] = "max_degree";
    s["start_step"] = cfg.spoofing->start_step;
    s["duration"] = cfg.spoofing->duration;
    s["disturbance_range"] = cfg.spoofing->disturbance_range;
    j["spoofing"] = s;
  }
  return j.dump(2) + "\n";
}

namespace {

void write_trace_csv(std::ostream& out, const GameTrace& trace) {
  const int n = static_cast<int>(trace.steps.front().agents.size());
  out << "step";
  for (int i = 1; i <= n; ++i) out << ",x" << i << ",y" << i << ",z" << i;
  out << ",lambda2_nominal,lambda2_worst,acting_player,spoof_active,spoof_target"
      << ",p1_status,p1_iterations,p1_scale,p2_status,p2_iterations,p2_scale\n";
  for (const auto& rec : trace.steps) {
    out << rec.step;
    for (const auto& a : rec.agents)
      out << ',' << fmt(a.position.x) << ',' << fmt(a.position.y) << ',' << fmt(a.position.z);
    out << ',' << fmt(rec.lambda2_nominal) << ',' << fmt(rec.lambda2_worst);
    const char* acting = "-";
    if (rec.p1_acted && rec.p2_acted)
      acting = "1+2";
    else if (rec.p1_acted)
      acting = "1";
    else if (rec.p2_acted)
      acting = "2";
    out << ',' << acting << ',' << (rec.spoof_active ? 1 : 0) << ',' << rec.spoof_target;
    auto diag = [&](const StepRecord::PlayerDiag& d) {
      if (!d.solved) {
        out << ",-,0,0";
      } else {
        out << ',' << to_string(d.status) << ',' << d.iterations << ',' << fmt(d.scale);
      }
    };
    diag(rec.diag_p1);
    diag(rec.diag_p2);
    out << '\n';
  }
}

json positions_json(const std::vector<AgentState>& agents) {
  json arr = json::array();
  for (const auto& a : agents)
    arr.push_back({{"id", a.id},
                   {"layer", a.layer == Layer::L1 ? 1 : 2},
                   {"position", position_json(a.position)}});
  return arr;
}

}  // namespace

int run_scenario(const ScenarioConfig& config, const std::filesystem::path& out_dir) {
  GameTrace trace;
  try {
    trace = run(config.agents, config.engine, config.p1, config.p2, config.weights, config.attack,
                config.spoofing);
  } catch (const Error& e) {
    log_line(3, std::string("run failed: ") + e.what());
    return 1;
  }

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) {
    log_line(3, "cannot create output directory " + out_dir.string());
    return 1;
  }

  {
    std::ofstream csv(out_dir / "trace.csv");
    if (!csv) {
      log_line(3, "cannot write trace.csv");
      return 1;
    }
    write_trace_csv(csv, trace);
  }

  EquilibriumReport eq;
  try {
    eq = check_meta_equilibrium(trace.steps.back().agents, config.p1, config.p2, config.weights,
                                config.attack, 1e-4, config.engine);
  } catch (const Error& e) {
    log_line(2, std::string("equilibrium check failed: ") + e.what());
  }

  {
    json summary;
    summary["schema_version"] = 1;
    summary["scenario"] = config.name;
    summary["converged"] = trace.converged;
    summary["steps"] = trace.steps_used;
    summary["final_lambda2_nominal"] = trace.steps.back().lambda2_nominal;
    summary["final_lambda2_worst"] = trace.steps.back().lambda2_worst;
    summary["final_positions"] = positions_json(trace.steps.back().agents);
    summary["equilibrium"] = {{"holds", eq.holds},
                              {"tol", eq.tol},
                              {"improvement_p1", eq.improvement_p1},
                              {"improvement_p2", eq.improvement_p2},
                              {"attack_is_best_response", eq.attack_is_best_response}};
    json attack_links = json::array();
    for (const Link& l : eq.attack_plan.removed) attack_links.push_back({l.i, l.j});
    summary["equilibrium"]["attack_links"] = attack_links;
    summary["equilibrium"]["attacked_lambda2"] = eq.attack_plan.resulting_lambda2;
    if (trace.spoofed) {
      summary["spoofing"] = {{"target", trace.spoof_plan.target},
                             {"start_step", trace.spoof_plan.start_step},
                             {"duration", trace.spoof_plan.duration}};
    }
    std::ofstream js(out_dir / "summary.json");
    if (!js) {
      log_line(3, "cannot write summary.json");
      return 1;
    }
    js << summary.dump(2) << "\n";
  }

  {
    json snap;
    snap["schema_version"] = 1;
    snap["positions"] = positions_json(trace.steps.back().agents);
    std::ofstream js(out_dir / "snapshot.json");
    js << snap.dump(2) << "\n";
  }

  {
    std::ofstream ev(out_dir / "events.log");
    ev << "scenario " << config.name << "\n";
    for (const auto& line : trace.events) ev << line << "\n";
    ev << "steps=" << trace.steps_used << " converged=" << (trace.converged ? "true" : "false")
       << " final_lambda2_worst=" << fmt(trace.steps.back().lambda2_worst) << "\n";
  }

  log_line(1, "scenario " + config.name + ": steps=" + std::to_string(trace.steps_used) +
                  " converged=" + (trace.converged ? "true" : "false") +
                  " lambda2_worst=" + fmt(trace.steps.back().lambda2_worst));
  return 0;
}

std::vector<AgentState> load_snapshot(const std::filesystem::path& path,
                                      const ScenarioConfig& config) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open snapshot file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  const json* arr = nullptr;
  if (auto it = j.find("positions"); it != j.end())
    arr = &*it;
  else if (auto it2 = j.find("final_positions"); it2 != j.end())
    arr = &*it2;
  if (!arr || !arr->is_array())
    throw ValidationError("snapshot needs a 'positions' (or 'final_positions') array");

  std::vector<AgentState> agents = config.agents;
  std::vector<bool> seen(agents.size(), false);
  for (const auto& item : *arr) {
    if (!item.contains("id") || !item.contains("position"))
      throw ValidationError("snapshot entries need id and position");
    const int id = item["id"].get<int>();
    if (id < 1 || id > static_cast<int>(agents.size()))
      throw ValidationError("snapshot references unknown agent id " + std::to_string(id));
    const auto& p = item["position"];
    if (!p.is_array() || p.size() != 3) throw ValidationError("snapshot positions must be [x,y,z]");
    agents[id - 1].position = Vec3(p[0].get<double>(), p[1].get<double>(), p[2].get<double>());
    seen[id - 1] = true;
  }
  for (size_t i = 0; i < seen.size(); ++i)
    if (!seen[i])
      throw ValidationError("snapshot is missing agent " + std::to_string(i + 1));
  return agents;
}

int verify_scenario(const ScenarioConfig& config, const std::filesystem::path& snapshot,
                    double tol, std::ostream& out) {
  std::vector<AgentState> agents;
  try {
    agents = load_snapshot(snapshot, config);
  } catch (const Error& e) {
    out << "error: " << e.what() << "\n";
    return 1;
  }
  EquilibriumReport eq;
  try {
    eq = check_meta_equilibrium(agents, config.p1, config.p2, config.weights, config.attack, tol,
                                config.engine);
  } catch (const Error& e) {
    out << "error: " << e.what() << "\n";
    return 1;
  }
  out << "equilibrium: " << (eq.holds ? "true" : "false") << "\n";
  out << "attacked_lambda2: " << fmt(eq.current_worst_lambda2) << "\n";
  out << "p1_improvement: " << fmt(eq.improvement_p1) << " (tol " << fmt(tol) << ")\n";
  out << "p2_improvement: " << fmt(eq.improvement_p2) << " (tol " << fmt(tol) << ")\n";
  out << "attack_best_response: " << (eq.attack_is_best_response ? "true" : "false") << "\n";
  out << "attack_links:";
  for (const Link& l : eq.attack_plan.removed) out << " (" << l.i << "," << l.j << ")";
  out << "\n";
  return eq.holds ? 0 : 2;
}

int attack_plan_report(const ScenarioConfig& config, const std::filesystem::path& snapshot,
                       std::ostream& out) {
  std::vector<AgentState> agents;
  try {
    agents = load_snapshot(snapshot, config);
  } catch (const Error& e) {
    out << "error: " << e.what() << "\n";
    return 1;
  }
  const CommGraph g = build_graph(agents, config.weights);
  const AttackActionSpace space = derive_space(g, config.attack);
  const JammingPlan worst = worst_case_attack(g, space);
  const JammingPlan greedy = greedy_attack(g, space);
  out << "candidates: " << space.candidate_links.size() << ", budget: " << space.budget_psi << "\n";
  auto print_plan = [&](const char* name, const JammingPlan& plan) {
    out << name << ": lambda2=" << fmt(plan.resulting_lambda2) << " links:";
    for (const Link& l : plan.removed) out << " (" << l.i << "," << l.j << ")";
    out << "\n";
  };
  print_plan("worst_case", worst);
  print_plan("greedy", greedy);
  return 0;
}

}  // namespace masgame
