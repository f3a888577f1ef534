#include "nkge/cli.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include "nkge/expression.hpp"

namespace nkge::cli {
namespace {

using nlohmann::json;

int line_of(const YAML::Node& node) {
  const auto mark = node.Mark();
  return mark.line >= 0 ? mark.line + 1 : 0;
}

std::string where(const YAML::Node& node) {
  const int line = line_of(node);
  return line > 0 ? fmt::format(" (line {})", line) : std::string();
}

// Scalars may be plain numbers or small expressions such as "1/8" or "2*pi".
double as_number(const YAML::Node& node, const std::string& field) {
  if (!node.IsScalar()) throw ValidationError(field, fmt::format("{} must be a number{}", field, where(node)));
  const std::string text = node.Scalar();
  try {
    return node.as<double>();
  } catch (const YAML::Exception&) {
  }
  try {
    const Complex z = Expression::parse(text).evaluate(0.0, 0.0);
    if (z.imag() == 0.0 && std::isfinite(z.real())) return z.real();
  } catch (const ExpressionError&) {
  }
  throw ValidationError(field, fmt::format("{} must be a number, got '{}'{}", field, text, where(node)));
}

std::int64_t as_integer(const YAML::Node& node, const std::string& field) {
  const double v = as_number(node, field);
  if (v != std::floor(v) || std::abs(v) > 9e15) {
    throw ValidationError(field, fmt::format("{} must be an integer{}", field, where(node)));
  }
  return static_cast<std::int64_t>(v);
}

bool as_bool(const YAML::Node& node, const std::string& field) {
  try {
    return node.as<bool>();
  } catch (const YAML::Exception&) {
    throw ValidationError(field, fmt::format("{} must be true or false{}", field, where(node)));
  }
}

std::string as_string(const YAML::Node& node, const std::string& field) {
  if (!node.IsScalar()) throw ValidationError(field, fmt::format("{} must be a string{}", field, where(node)));
  return node.Scalar();
}

template <class T, class Fn>
std::vector<T> as_list(const YAML::Node& node, const std::string& field, Fn convert) {
  std::vector<T> out;
  if (node.IsSequence()) {
    for (const auto& item : node) out.push_back(convert(item, field));
  } else {
    out.push_back(convert(node, field));
  }
  if (out.empty()) throw ValidationError(field, fmt::format("{} must not be empty{}", field, where(node)));
  return out;
}

void check_keys(const YAML::Node& map, const std::set<std::string>& allowed, const std::string& section) {
  if (!map.IsMap()) {
    throw ValidationError(section, fmt::format("{} must be a mapping{}", section.empty() ? "config" : section, where(map)));
  }
  for (const auto& kv : map) {
    const std::string key = kv.first.as<std::string>();
    if (!allowed.count(key)) {
      const std::string path = section.empty() ? key : section + "." + key;
      throw ConfigError(fmt::format("unknown key '{}'{}", path, where(kv.first)), line_of(kv.first));
    }
  }
}

void check_even(int n, const std::string& field) {
  if (n % 2 != 0) throw ValidationError(field, fmt::format("N must be even (got {})", n));
  if (n < 4) throw ValidationError(field, fmt::format("N must be at least 4 (got {})", n));
}

void check_eps(double eps, const std::string& field) {
  if (!(eps > 0.0 && eps <= 1.0)) throw ValidationError(field, "epsilon must lie in (0,1]");
}

void check_positive(double v, const std::string& field) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError(field, fmt::format("{} must be positive", field));
}

YAML::Node override_value(const std::string& text) {
  std::string src = text;
  if (src.find(',') != std::string::npos && src.find('[') == std::string::npos) src = "[" + src + "]";
  YAML::Node node = YAML::Load(src);
  return node;
}

void apply_override(YAML::Node& root, const std::string& path, const std::string& value) {
  const auto dot = path.find('.');
  if (dot == std::string::npos) {
    root[path] = override_value(value);
    return;
  }
  const std::string head = path.substr(0, dot);
  YAML::Node child = root[head];
  if (!child || child.IsNull()) {
    child = YAML::Node(YAML::NodeType::Map);
  }
  apply_override(child, path.substr(dot + 1), value);
  root[head] = child;
}

std::vector<Interval> parse_domain(const YAML::Node& node) {
  std::vector<Interval> axes;
  auto interval = [](const YAML::Node& n, const std::string& field) {
    if (!n.IsSequence() || n.size() != 2) {
      throw ValidationError(field, fmt::format("{} must be a pair [a, b]{}", field, where(n)));
    }
    return Interval{as_number(n[0], field), as_number(n[1], field)};
  };
  if (node.IsMap()) {
    check_keys(node, {"x", "y"}, "problem.domain");
    if (!node["x"]) throw ValidationError("problem.domain", "problem.domain needs an x interval");
    axes.push_back(interval(node["x"], "problem.domain.x"));
    if (node["y"]) axes.push_back(interval(node["y"], "problem.domain.y"));
  } else if (node.IsSequence() && node.size() > 0 && node[0].IsSequence()) {
    for (const auto& item : node) axes.push_back(interval(item, "problem.domain"));
  } else {
    axes.push_back(interval(node, "problem.domain"));
  }
  if (axes.size() > 2) throw ValidationError("problem.domain", "only 1D and 2D domains are supported");
  for (const auto& a : axes) {
    if (!(a.length() > 0.0)) throw ValidationError("problem.domain", "domain bounds must satisfy a < b");
  }
  return axes;
}

CustomProblem parse_problem(const YAML::Node& node) {
  check_keys(node, {"domain", "p", "u0", "v0", "formulation", "regime"}, "problem");
  CustomProblem out;
  if (!node["domain"]) throw ValidationError("problem.domain", "problem.domain is required");
  out.domain = parse_domain(node["domain"]);
  if (node["p"]) out.p = static_cast<int>(as_integer(node["p"], "problem.p"));
  if (out.p < 1) throw ValidationError("problem.p", "power index p must be a positive integer");
  for (const char* key : {"u0", "v0"}) {
    if (!node[key]) throw ValidationError(std::string("problem.") + key, fmt::format("problem.{} is required", key));
  }
  out.u0 = as_string(node["u0"], "problem.u0");
  out.v0 = as_string(node["v0"], "problem.v0");
  for (const auto& text : {out.u0, out.v0}) {
    try {
      Expression::parse(text);
    } catch (const ExpressionError& e) {
      throw ValidationError("problem.u0/v0", fmt::format("'{}': {}", text, e.what()));
    }
  }
  if (node["formulation"]) {
    const std::string f = as_string(node["formulation"], "problem.formulation");
    if (f == "real-cubic") {
      out.formulation = Formulation::RealCubic;
    } else if (f == "complex-power") {
      out.formulation = Formulation::ComplexPower;
    } else {
      throw ValidationError("problem.formulation", "formulation must be real-cubic or complex-power");
    }
  }
  if (out.formulation == Formulation::RealCubic && out.p != 1) {
    throw ValidationError("problem.formulation", "the real cubic formulation requires p = 1");
  }
  if (node["regime"]) {
    const std::string r = as_string(node["regime"], "problem.regime");
    if (r == "long-time") {
      out.regime = RegimeKind::LongTime;
    } else if (r == "oscillatory") {
      out.regime = RegimeKind::Oscillatory;
    } else {
      throw ValidationError("problem.regime", "regime must be long-time or oscillatory");
    }
  }
  return out;
}

const std::set<std::string> kTopLevelKeys = {
    "preset", "problem", "eps", "scheme", "tau", "kappa", "N", "T", "t_eval", "taus", "N_list", "eps_list",
    "levels", "kappa0", "eps0", "snapshots", "sample_every", "reference", "output", "budget", "jobs", "fused"};

std::vector<double> default_taus() { return {0.1, 0.05, 0.025, 0.0125}; }

}  // namespace

std::string_view subcommand_name(Subcommand command) noexcept {
  switch (command) {
    case Subcommand::Solve:
      return "solve";
    case Subcommand::Temporal:
      return "temporal";
    case Subcommand::Spatial:
      return "spatial";
    case Subcommand::Longtime:
      return "longtime";
    case Subcommand::Table1:
      return "table1";
  }
  return "unknown";
}

Subcommand parse_subcommand(std::string_view name) {
  for (auto c : {Subcommand::Solve, Subcommand::Temporal, Subcommand::Spatial, Subcommand::Longtime,
                 Subcommand::Table1}) {
    if (subcommand_name(c) == name) return c;
  }
  throw ValidationError("subcommand", fmt::format("unknown subcommand '{}'", name));
}

ProblemSpec RunConfig::problem() const {
  ProblemSpec spec = [&] {
    if (!custom) return nkge::preset(preset);
    const CustomProblem& c = *custom;
    const Expression u0 = Expression::parse(c.u0);
    const Expression v0 = Expression::parse(c.v0);
    Domain domain = c.domain.size() == 1 ? Domain(c.domain[0]) : Domain(c.domain[0], c.domain[1]);
    return ProblemSpec{
        .name = "custom",
        .domain = domain,
        .p = c.p,
        .epsilon = 1.0,
        .u0 = {c.u0, [u0](double x, double y) { return u0.evaluate(x, y); }},
        .v0 = {c.v0, [v0](double x, double y) { return v0.evaluate(x, y); }},
        .formulation = c.formulation,
        .regime = {c.regime, 1.0},
        .default_shape = {},
    };
  }();
  spec.epsilon = eps;
  spec.regime.T = T;
  spec.validate();
  return spec;
}

EvolveOptions RunConfig::evolve_options() const { return {fused, max_steps, max_seconds}; }

json RunConfig::to_json() const {
  auto opt = [](const auto& v) { return v ? json(*v) : json(nullptr); };
  json problem_json;
  if (custom) {
    json domain = json::array();
    for (const auto& a : custom->domain) domain.push_back({a.lower, a.upper});
    problem_json = {{"domain", domain},
                    {"p", custom->p},
                    {"u0", custom->u0},
                    {"v0", custom->v0},
                    {"formulation", custom->formulation == Formulation::RealCubic ? "real-cubic" : "complex-power"},
                    {"regime", custom->regime == RegimeKind::Oscillatory ? "oscillatory" : "long-time"}};
  }
  return {
      {"subcommand", std::string(subcommand_name(command))},
      {"preset", preset.empty() ? json(nullptr) : json(preset)},
      {"problem", problem_json},
      {"eps", eps},
      {"scheme", std::string(scheme_name(scheme))},
      {"tau", opt(tau)},
      {"kappa", opt(kappa)},
      {"N", n},
      {"T", T},
      {"t_eval", opt(t_eval)},
      {"taus", taus},
      {"N_list", n_list},
      {"eps_list", eps_list},
      {"levels", levels},
      {"kappa0", kappa0},
      {"eps0", eps0},
      {"snapshots", snapshots},
      {"sample_every", opt(sample_every)},
      {"reference",
       {{"N", opt(reference.shape)},
        {"tau", opt(reference.tau)},
        {"scheme", std::string(scheme_name(reference.scheme))},
        {"verify", reference.verify},
        {"tolerance", reference.tolerance}}},
      {"output", {{"dir", output_dir}, {"prefix", prefix}}},
      {"budget", {{"max_steps", max_steps}, {"max_seconds", max_seconds}}},
      {"jobs", jobs},
      {"fused", fused},
  };
}

RunConfig parse_config(Subcommand command, std::string_view text, const Overrides& overrides) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::ParserException& e) {
    throw ConfigError(fmt::format("config parse error at line {}: {}", e.mark.line + 1, e.msg), e.mark.line + 1);
  }
  if (!root || root.IsNull()) root = YAML::Node(YAML::NodeType::Map);
  if (!root.IsMap()) throw ConfigError("config must be a key-value mapping", line_of(root));
  for (const auto& [key, value] : overrides) {
    try {
      apply_override(root, key, value);
    } catch (const YAML::Exception& e) {
      throw ConfigError(fmt::format("bad value for --{}: {}", key, e.what()), 0);
    }
  }
  check_keys(root, kTopLevelKeys, "");

  RunConfig c;
  c.command = command;
  c.prefix = std::string(subcommand_name(command));

  if (root["preset"] && root["problem"]) {
    throw ValidationError("preset", "give either a preset or a problem section, not both");
  }
  if (root["preset"]) {
    c.preset = as_string(root["preset"], "preset");
    const auto names = preset_names();
    if (std::find(names.begin(), names.end(), c.preset) == names.end()) {
      throw ValidationError("preset", fmt::format("unknown preset '{}'", c.preset));
    }
  } else if (root["problem"]) {
    c.custom = parse_problem(root["problem"]);
  } else if (command == Subcommand::Table1) {
    c.preset = "osc-1d-p1";
  } else {
    throw ValidationError("preset", "a preset or a problem section is required");
  }
  const ProblemSpec base = c.custom ? c.problem() : preset(c.preset);

  if (root["eps"]) c.eps = as_number(root["eps"], "eps");
  check_eps(c.eps, "eps");
  if (root["scheme"]) c.scheme = parse_scheme(as_string(root["scheme"], "scheme"));
  if (root["tau"]) {
    c.tau = as_number(root["tau"], "tau");
    check_positive(*c.tau, "tau");
  }
  if (root["kappa"]) {
    c.kappa = as_number(root["kappa"], "kappa");
    check_positive(*c.kappa, "kappa");
  }
  c.T = base.regime.T;
  if (root["T"]) c.T = as_number(root["T"], "T");
  check_positive(c.T, "T");
  if (root["t_eval"]) {
    c.t_eval = as_number(root["t_eval"], "t_eval");
    check_positive(*c.t_eval, "t_eval");
  }

  const auto dims = static_cast<std::size_t>(base.domain.dims());
  if (root["N"]) {
    auto list = as_list<int>(root["N"], "N", [](const YAML::Node& n, const std::string& f) {
      return static_cast<int>(as_integer(n, f));
    });
    if (list.size() == 1) list.assign(dims, list.front());
    if (list.size() != dims) throw ValidationError("N", fmt::format("N needs {} entries for this domain", dims));
    c.n = list;
  } else if (!base.default_shape.empty()) {
    c.n = base.default_shape;
  } else {
    throw ValidationError("N", "N is required for a custom problem");
  }
  for (int n : c.n) check_even(n, "N");

  auto int_list = [](const YAML::Node& n, const std::string& f) { return static_cast<int>(as_integer(n, f)); };
  if (root["taus"]) {
    c.taus = as_list<double>(root["taus"], "taus", as_number);
    for (double t : c.taus) check_positive(t, "taus");
  } else if (command == Subcommand::Temporal) {
    c.taus = default_taus();
  }
  if (root["N_list"]) {
    c.n_list = as_list<int>(root["N_list"], "N_list", int_list);
  } else if (command == Subcommand::Spatial) {
    c.n_list = {8, 16, 32, 64};
  }
  for (int n : c.n_list) check_even(n, "N_list");
  if (root["eps_list"]) {
    c.eps_list = as_list<double>(root["eps_list"], "eps_list", as_number);
  } else if (command == Subcommand::Longtime) {
    c.eps_list = {0.5, 0.25, 0.125};
  }
  for (double e : c.eps_list) check_eps(e, "eps_list");

  if (root["levels"]) c.levels = static_cast<int>(as_integer(root["levels"], "levels"));
  if (c.levels < 1 || c.levels > 8) throw ValidationError("levels", "levels must lie in 1..8");
  if (root["kappa0"]) c.kappa0 = as_number(root["kappa0"], "kappa0");
  check_positive(c.kappa0, "kappa0");
  if (root["eps0"]) c.eps0 = as_number(root["eps0"], "eps0");
  check_eps(c.eps0, "eps0");
  if (root["snapshots"]) c.snapshots = static_cast<int>(as_integer(root["snapshots"], "snapshots"));
  if (c.snapshots < 0) throw ValidationError("snapshots", "snapshots must be non-negative");
  if (root["sample_every"]) {
    c.sample_every = as_integer(root["sample_every"], "sample_every");
    if (*c.sample_every < 1) throw ValidationError("sample_every", "sample_every must be at least 1");
  }
  if (root["jobs"]) c.jobs = static_cast<int>(as_integer(root["jobs"], "jobs"));
  if (c.jobs < 1) throw ValidationError("jobs", "jobs must be at least 1");
  if (root["fused"]) c.fused = as_bool(root["fused"], "fused");

  if (const auto ref = root["reference"]) {
    check_keys(ref, {"N", "tau", "scheme", "verify", "tolerance"}, "reference");
    if (ref["N"]) {
      auto list = as_list<int>(ref["N"], "reference.N", int_list);
      if (list.size() == 1) list.assign(dims, list.front());
      if (list.size() != dims) throw ValidationError("reference.N", "reference.N has the wrong number of axes");
      for (int n : list) check_even(n, "reference.N");
      c.reference.shape = list;
    }
    if (ref["tau"]) {
      c.reference.tau = as_number(ref["tau"], "reference.tau");
      check_positive(*c.reference.tau, "reference.tau");
    }
    if (ref["scheme"]) c.reference.scheme = parse_scheme(as_string(ref["scheme"], "reference.scheme"));
    if (ref["verify"]) c.reference.verify = as_bool(ref["verify"], "reference.verify");
    if (ref["tolerance"]) c.reference.tolerance = as_number(ref["tolerance"], "reference.tolerance");
    check_positive(c.reference.tolerance, "reference.tolerance");
  }
  if (const auto out = root["output"]) {
    check_keys(out, {"dir", "prefix"}, "output");
    if (out["dir"]) c.output_dir = as_string(out["dir"], "output.dir");
    if (out["prefix"]) c.prefix = as_string(out["prefix"], "output.prefix");
  }
  if (const char* env = std::getenv(kOutputDirEnv); env && *env && !overrides.count("output.dir")) {
    c.output_dir = env;
  }
  if (c.prefix.empty() || c.prefix.find('/') != std::string::npos) {
    throw ValidationError("output.prefix", "output prefix must be a non-empty file name");
  }
  if (const auto budget = root["budget"]) {
    check_keys(budget, {"max_steps", "max_seconds"}, "budget");
    if (budget["max_steps"]) c.max_steps = as_integer(budget["max_steps"], "budget.max_steps");
    if (budget["max_seconds"]) c.max_seconds = as_number(budget["max_seconds"], "budget.max_seconds");
  }
  if (c.max_steps < 1) throw ValidationError("budget.max_steps", "budget.max_steps must be at least 1");
  if (!(c.max_seconds >= 0.0)) throw ValidationError("budget.max_seconds", "budget.max_seconds must be >= 0");

  const ProblemSpec spec = c.problem();
  if (command == Subcommand::Solve && !c.tau) {
    if (!c.kappa) throw ValidationError("tau", "solve needs tau (or kappa for an oscillatory problem)");
    c.tau = rescale_oscillatory(spec, *c.kappa).tau;
  }
  if (command == Subcommand::Spatial && !c.tau) c.tau = 1e-3;
  if (command == Subcommand::Longtime && !c.tau) c.tau = 0.05;
  if (command == Subcommand::Table1 && spec.regime.kind != RegimeKind::Oscillatory) {
    throw ValidationError("preset", "table1 needs an oscillatory problem (e.g. osc-1d-p1)");
  }
  return c;
}

RunConfig parse_config_file(Subcommand command, const std::filesystem::path& path, const Overrides& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot read config file '{}'", path.string()), 0);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(command, buffer.str(), overrides);
}

void write_file_atomically(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::filesystem::filesystem_error("cannot open for writing", tmp, std::make_error_code(std::errc::io_error));
    out << contents;
    out.flush();
    if (!out) throw std::filesystem::filesystem_error("write failed", tmp, std::make_error_code(std::errc::io_error));
  }
  std::filesystem::rename(tmp, path);
}

namespace {

std::string csv_of(std::span<const ErrorRecord> records) {
  std::ostringstream out;
  write_error_csv(out, records);
  return out.str();
}

json orders_json(const ConvergenceTable& table) {
  json out = json::array();
  for (const auto& r : table.rows) out.push_back(r.order ? json(*r.order) : json(nullptr));
  return out;
}

struct Outputs {
  std::string csv;
  json summary;
  std::vector<std::pair<std::string, std::string>> extra;  // suffix -> contents
};

double max_imag(const GridField& f) {
  double m = 0.0;
  for (const auto& z : f.values()) m = std::max(m, std::abs(z.imag()));
  return m;
}

Outputs run_solve(const RunConfig& c) {
  const ProblemSpec spec = c.problem();
  const GridPtr grid = build_grid(spec.domain, c.n);
  const double tau = *c.tau;
  const double t_final = spec.horizon();
  const std::int64_t steps = step_count(t_final, tau);
  std::vector<std::int64_t> observe;
  for (int k = 0; k <= c.snapshots; ++k) {
    const std::int64_t n = c.snapshots == 0 ? steps : std::llround(static_cast<double>(k) * steps / c.snapshots);
    if (observe.empty() || observe.back() != n) observe.push_back(n);
  }
  if (observe.back() != steps) observe.push_back(steps);

  const std::optional<double> kappa =
      spec.regime.kind == RegimeKind::Oscillatory ? std::optional<double>(tau * spec.coupling()) : std::nullopt;
  std::ostringstream csv;
  csv << "scheme,p,eps,tau,kappa,N,step,t,energy,u_h1,v_l2,max_imag_u\n";
  double e0 = 0.0;
  double max_drift = 0.0;
  SplitState state = make_split_state(spec.formulation, initial_state(spec, grid));
  run_steps(
      Stepper(grid, c.scheme, tau, binding_of(spec)), state, steps, observe,
      [&](std::int64_t n, const SplitState& s) {
        const StateUV uv = recover_uv(s);
        const double e = energy(uv, spec.epsilon, spec.p);
        if (n == 0) e0 = e;
        if (e0 != 0.0) max_drift = std::max(max_drift, std::abs(e - e0) / e0);
        csv << scheme_name(c.scheme) << ',' << spec.p << ',' << format_number(spec.epsilon) << ','
            << format_number(tau) << ',' << (kappa ? format_number(*kappa) : std::string()) << ','
            << format_shape(c.n) << ',' << n << ',' << format_number(static_cast<double>(n) * tau) << ','
            << format_number(e) << ',' << format_number(sobolev_norm(to_spectrum(uv.u), 1.0)) << ','
            << format_number(sobolev_norm(to_spectrum(uv.v), 0.0)) << ',' << format_number(max_imag(uv.u)) << '\n';
      },
      c.evolve_options());

  const StateUV final_uv = recover_uv(state);
  std::ostringstream fields;
  fields << (grid->dims() == 1 ? "x" : "x,y") << ",u_re,u_im,v_re,v_im\n";
  for (std::size_t j = 0; j < grid->size(); ++j) {
    if (grid->dims() == 1) {
      fields << format_number(grid->node(0, static_cast<int>(j))) << ',';
    } else {
      const auto n1 = static_cast<std::size_t>(grid->points(1));
      fields << format_number(grid->node(0, static_cast<int>(j / n1))) << ','
             << format_number(grid->node(1, static_cast<int>(j % n1))) << ',';
    }
    fields << format_number(final_uv.u[j].real()) << ',' << format_number(final_uv.u[j].imag()) << ','
           << format_number(final_uv.v[j].real()) << ',' << format_number(final_uv.v[j].imag()) << '\n';
  }
  json summary = {{"steps", steps},
                  {"t_final", static_cast<double>(steps) * tau},
                  {"tau", tau},
                  {"initial_energy", e0},
                  {"max_relative_energy_drift", max_drift}};
  return {csv.str(), summary, {{"_final.csv", fields.str()}}};
}

Outputs run_temporal(const RunConfig& c) {
  const ProblemSpec spec = c.problem();
  const double t_eval = c.t_eval.value_or(spec.horizon());
  const auto result = temporal_convergence(spec, c.n, c.scheme, c.taus, t_eval, c.reference, c.jobs,
                                           c.evolve_options());
  json summary = {{"t_eval", t_eval},
                  {"table", to_json(result.table)},
                  {"fitted_order", result.slope},
                  {"expected_order", scheme_order(c.scheme)}};
  return {csv_of(result.records), summary, {}};
}

Outputs run_spatial(const RunConfig& c) {
  const ProblemSpec base = c.problem();
  std::vector<double> eps_values = c.eps_list.empty() ? std::vector<double>{c.eps} : c.eps_list;
  std::vector<ErrorRecord> records;
  json runs = json::array();
  for (double eps : eps_values) {
    const ProblemSpec spec = base.with_epsilon(eps);
    const double t_eval = c.t_eval.value_or(spec.horizon());
    const auto result = spatial_convergence(spec, c.scheme, c.n_list, *c.tau, t_eval, c.reference, c.jobs,
                                            c.evolve_options());
    records.insert(records.end(), result.records.begin(), result.records.end());
    runs.push_back({{"eps", eps}, {"t_eval", t_eval}, {"table", to_json(result.table)}});
  }
  return {csv_of(records), {{"runs", runs}}, {}};
}

Outputs run_longtime(const RunConfig& c) {
  const ProblemSpec spec = c.problem();
  const auto result = longtime_sweep(spec, c.n, c.scheme, *c.tau, c.eps_list, c.sample_every, c.reference, c.jobs,
                                     c.evolve_options());
  std::vector<ErrorRecord> records;
  json runs = json::array();
  for (const auto& run : result.runs) {
    records.insert(records.end(), run.records.begin(), run.records.end());
    runs.push_back({{"eps", run.eps},
                    {"t_final", run.t_final},
                    {"sample_every", run.sample_every},
                    {"final_e1max", run.final_e1max}});
  }
  json nominal = json::array();
  for (std::size_t k = 1; k < c.eps_list.size(); ++k) {
    nominal.push_back(std::pow(c.eps_list[k - 1] / c.eps_list[k], 2 * spec.p));
  }
  return {csv_of(records), {{"runs", runs}, {"ratios", result.ratios}, {"nominal_ratios", nominal}}, {}};
}

Outputs run_table1(const RunConfig& c) {
  const ProblemSpec spec = c.problem();
  const auto result =
      table1_experiment(spec, c.n, c.kappa0, c.eps0, c.levels, c.reference, c.jobs, c.evolve_options());
  json orders = json::array();
  json diagonal = json::array();
  for (std::size_t i = 0; i < result.rows.size(); ++i) {
    orders.push_back(orders_json(result.rows[i]));
    const auto& row = result.rows[i].rows[i];
    diagonal.push_back({{"i", i}, {"j", i}, {"e1", row.error}, {"order", row.order ? json(*row.order) : json(nullptr)}});
  }
  return {csv_of(result.records),
          {{"eps", result.eps}, {"kappa", result.kappa}, {"errors", result.errors}, {"orders", orders},
           {"diagonal", diagonal}},
          {}};
}

}  // namespace

int run(const RunConfig& config, std::ostream& log, std::ostream& err) {
  Outputs outputs;
  try {
    switch (config.command) {
      case Subcommand::Solve:
        outputs = run_solve(config);
        break;
      case Subcommand::Temporal:
        outputs = run_temporal(config);
        break;
      case Subcommand::Spatial:
        outputs = run_spatial(config);
        break;
      case Subcommand::Longtime:
        outputs = run_longtime(config);
        break;
      case Subcommand::Table1:
        outputs = run_table1(config);
        break;
    }
  } catch (const BlowUpError& e) {
    err << "error: " << subcommand_name(config.command) << ": " << e.what() << '\n';
    return 2;
  } catch (const BudgetExceededError& e) {
    err << "error: " << subcommand_name(config.command) << ": " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    err << "error: " << subcommand_name(config.command) << ": " << e.what() << '\n';
    return 1;
  }

  const std::filesystem::path dir(config.output_dir);
  const std::filesystem::path csv_path = dir / (config.prefix + ".csv");
  const std::filesystem::path json_path = dir / (config.prefix + ".json");
  json summary = {{"config", config.to_json()}, {"csv", csv_path.filename().string()}, {"results", outputs.summary}};
  try {
    write_file_atomically(csv_path, outputs.csv);
    for (const auto& [suffix, contents] : outputs.extra) write_file_atomically(dir / (config.prefix + suffix), contents);
    write_file_atomically(json_path, summary.dump(2) + "\n");
  } catch (const std::exception& e) {
    err << "error: writing outputs: " << e.what() << '\n';
    return 3;
  }
  log << "wrote " << csv_path.string() << " and " << json_path.string() << '\n';
  return 0;
}

}  // namespace nkge::cli
