#include <cstdlib>
#include <fstream>
#include <iostream>
#include <functional>
#include <sstream>

#include "CLI11.hpp"

#include "dualfpc/ad.hpp"
#include "dualfpc/eval.hpp"
#include "dualfpc/ops.hpp"
#include "dualfpc/pretty.hpp"
#include "dualfpc/surface.hpp"
#include "dualfpc/typecheck.hpp"
#include "dualfpc/verify.hpp"

namespace {

using namespace dualfpc;

constexpr int kExitParse = 1;
constexpr int kExitType = 2;
constexpr int kExitBottom = 3;
constexpr int kExitTolerance = 4;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Loaded {
  SourceFile file;
};

// parse + typecheck, mapping failures to the documented exit codes
Loaded load(const std::string& path, Lang lang, int* exit_code) {
  Loaded out;
  try {
    out.file = parse_file(read_file(path));
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    *exit_code = kExitParse;
    return out;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    *exit_code = kExitParse;
    return out;
  }
  try {
    check_file(out.file, lang);
  } catch (const TypeError& e) {
    std::cerr << "type error: " << e.render() << "\n";
    *exit_code = kExitType;
  }
  return out;
}

const Definition* pick_entry(const SourceFile& file, const std::string& entry) {
  if (!entry.empty()) return file.find(entry);
  return file.entry();
}

uint64_t default_seed() {
  if (const char* env = std::getenv("DUALFPC_SEED")) return std::strtoull(env, nullptr, 10);
  return 42;
}

int cmd_check(const std::string& path, bool target) {
  int rc = 0;
  auto loaded = load(path, target ? Lang::target : Lang::source, &rc);
  if (rc) return rc;
  for (const auto& def : loaded.file.defs)
    std::cout << def.name << " : " << pretty(def.declared_type) << "\n";
  return 0;
}

int cmd_ad(const std::string& path, const std::string& mode, const std::string& out_path) {
  int rc = 0;
  auto loaded = load(path, Lang::source, &rc);
  if (rc) return rc;

  std::ostringstream out;
  out << "-- mode: " << mode << "\n";
  for (const auto& def : loaded.file.defs) {
    TypeRef dual_type;
    TermRef dual_term;
    try {
      dual_type = ad_type(def.declared_type);
      dual_term = ad_term(def.term);
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kExitType;
    }
    out << "def " << def.name << " : " << pretty(dual_type) << " =\n  "
        << pretty(dual_term) << " ;;\n";
  }
  if (out_path.empty()) {
    std::cout << out.str();
  } else {
    std::ofstream f(out_path);
    f << out.str();
  }
  return 0;
}

int cmd_run(const std::string& path, const std::vector<std::string>& args,
            const std::string& entry, long fuel, bool target) {
  int rc = 0;
  auto loaded = load(path, target ? Lang::target : Lang::source, &rc);
  if (rc) return rc;
  const auto* def = pick_entry(loaded.file, entry);
  if (!def) {
    std::cerr << "error: no entry definition\n";
    return kExitParse;
  }

  TermRef term = linked_term(loaded.file, def->name);
  for (const auto& a : args) {
    try {
      term = m_app(term, parse_term_text(a));
    } catch (const ParseError& e) {
      std::cerr << "argument parse error: " << e.what() << "\n";
      return kExitParse;
    }
  }

  auto r = eval(nullptr, term, Backend::k1, fuel);
  std::cout << describe(r.outcome) << "\n";
  return r.outcome.converged() ? 0 : kExitBottom;
}

std::vector<double> parse_floats(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(std::strtod(item.c_str(), nullptr));
  return out;
}

// builds the input point either from a flat list of reals (products of reals
// only) or from an explicit value term
std::optional<FlatValue> input_point(const Program& prog, const std::string& at,
                                     const std::string& at_term, long fuel) {
  if (!at_term.empty()) {
    auto term = parse_term_text(at_term);
    Context ctx;
    check(ctx, term, prog.input_type, Lang::source);
    auto r = eval(nullptr, term, Backend::k1, fuel);
    if (!r.outcome.converged()) {
      std::cerr << "error: input term did not evaluate: " << describe(r.outcome) << "\n";
      return std::nullopt;
    }
    return flatten_value(r.outcome.value(), prog.input_type);
  }
  auto slots = parse_floats(at);
  // a flat list of reals only names a point unambiguously when the input
  // type has a single component (products of reals and units)
  std::function<bool(const TypeRef&)> single_component = [&](const TypeRef& t) {
    return std::visit(overloaded{
      [](const ty::Real&) { return true; },
      [](const ty::Unit&) { return true; },
      [&](const ty::Prod& p) { return single_component(p.left) && single_component(p.right); },
      [](const auto&) { return false; },
    }, t->node);
  };
  if (!single_component(prog.input_type)) {
    std::cerr << "error: input type " << pretty(prog.input_type)
              << " has sums or recursion; pass the point with --at-term\n";
    return std::nullopt;
  }
  std::mt19937_64 rng(0);
  auto probe = random_value(prog.input_type, rng, 0.0, 0.0, 0);
  auto flat = flatten_value(*probe, prog.input_type);
  if (flat.slots.size() != slots.size()) {
    std::cerr << "error: --at expects " << flat.slots.size() << " reals for "
              << pretty(prog.input_type) << "\n";
    return std::nullopt;
  }
  flat.slots = std::move(slots);
  return flat;
}

int cmd_jvp(const std::string& path, const std::string& entry, const std::string& at,
            const std::string& at_term, const std::string& dir, long fuel) {
  int rc = 0;
  auto loaded = load(path, Lang::source, &rc);
  if (rc) return rc;
  const auto* def = pick_entry(loaded.file, entry);
  if (!def) { std::cerr << "error: no entry definition\n"; return kExitParse; }

  try {
    auto prog = program_from_def(loaded.file, *def);
    auto point = input_point(prog, at, at_term, fuel);
    if (!point) return kExitParse;
    auto direction = parse_floats(dir);
    if (direction.empty()) direction.assign(point->slots.size(), 1.0);
    if (direction.size() != point->slots.size()) {
      std::cerr << "error: --dir expects " << point->slots.size() << " reals\n";
      return kExitParse;
    }

    std::vector<Tangent> seeds;
    for (double d : direction) seeds.push_back(Tangent::scalar(d));
    auto fnr = eval(nullptr, prog.dual_fn, Backend::k1, fuel);
    if (!fnr.outcome.converged()) {
      std::cout << describe(fnr.outcome) << "\n";
      return kExitBottom;
    }
    auto out = apply_function(fnr.outcome.value(),
                              dual_embed(*point, seeds, prog.input_type), Backend::k1, fuel);
    if (!out.outcome.converged()) {
      std::cout << describe(out.outcome) << "\n";
      return kExitBottom;
    }
    auto primal = erase_dual(out.outcome.value(), prog.output_type);
    auto tangents = dual_tangents(out.outcome.value(), prog.output_type);
    std::cout << "value: " << pretty_value(primal) << "\n";
    std::cout << "jvp:";
    for (const auto& t : tangents) std::cout << " " << fmt_double(t.scalar_value());
    std::cout << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitType;
  }
}

int cmd_grad(const std::string& path, const std::string& entry, const std::string& at,
             const std::string& at_term, long fuel) {
  int rc = 0;
  auto loaded = load(path, Lang::source, &rc);
  if (rc) return rc;
  const auto* def = pick_entry(loaded.file, entry);
  if (!def) { std::cerr << "error: no entry definition\n"; return kExitParse; }

  try {
    auto prog = program_from_def(loaded.file, *def);
    auto point = input_point(prog, at, at_term, fuel);
    if (!point) return kExitParse;

    const size_t n = point->slots.size();
    std::vector<Tangent> seeds;
    for (size_t j = 0; j < n; ++j)
      seeds.push_back(Tangent::basis(static_cast<int>(j) + 1, Backend::kinf));
    auto fnr = eval(nullptr, prog.dual_fn, Backend::kinf, fuel);
    if (!fnr.outcome.converged()) {
      std::cout << describe(fnr.outcome) << "\n";
      return kExitBottom;
    }
    auto out = apply_function(fnr.outcome.value(),
                              dual_embed(*point, seeds, prog.input_type), Backend::kinf, fuel);
    if (!out.outcome.converged()) {
      std::cout << describe(out.outcome) << "\n";
      return kExitBottom;
    }
    auto primal = erase_dual(out.outcome.value(), prog.output_type);
    auto tangents = dual_tangents(out.outcome.value(), prog.output_type);
    std::cout << "value: " << pretty_value(primal) << "\n";
    for (const auto& t : tangents) {
      auto row = t.project(static_cast<int>(n == 0 ? 1 : n));
      std::cout << "grad:";
      for (size_t j = 0; j < n; ++j) std::cout << " " << fmt_double(row[j]);
      std::cout << "\n";
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitType;
  }
}

int cmd_verify(const std::string& path, int trials, double eps, double tol, uint64_t seed,
               long fuel, bool json, double lo, double hi) {
  int rc = 0;
  auto loaded = load(path, Lang::source, &rc);
  if (rc) return rc;

  bool any_fail = false;
  std::mt19937_64 rng(seed);

  for (const auto& def : loaded.file.defs) {
    Program prog;
    try {
      prog = program_from_def(loaded.file, def);
    } catch (const std::exception&) {
      std::cout << def.name << ": skipped (not a first-order numeric program)\n";
      continue;
    }
    if (!type_inhabited(prog.input_type, 6)) {
      std::cout << def.name << ": skipped (uninhabited input type)\n";
      continue;
    }

    int passed = 0, failed = 0, kinks = 0, bottoms = 0, inconclusive = 0;
    double worst = 0.0;
    const int max_attempts = trials * 20;
    for (int attempt = 0; attempt < max_attempts && passed + failed < trials; ++attempt) {
      auto v = random_value(prog.input_type, rng, lo, hi, 6);
      if (!v) continue;
      auto point = flatten_value(*v, prog.input_type);

      std::vector<double> dir(point.slots.size());
      for (auto& d : dir) d = std::uniform_real_distribution<double>(-1.0, 1.0)(rng);

      auto fwd = forward_check(prog, point, dir, eps, tol, fuel);
      auto rev = reverse_jacobian(prog, point, eps, tol, fuel);
      for (const auto* r : {&fwd, &rev}) {
        if (json) std::cout << report_json(*r) << "\n";
        switch (r->verdict) {
          case Verdict::pass: ++passed; worst = std::max(worst, r->max_rel_err); break;
          case Verdict::fail: ++failed; any_fail = true; break;
          case Verdict::kink: ++kinks; break;
          case Verdict::bottom_consistent: ++bottoms; break;
          case Verdict::bottom_mismatch: ++failed; any_fail = true; break;
          case Verdict::inconclusive: ++inconclusive; break;
        }
      }
    }
    if (!json)
      std::cout << def.name << ": " << passed << " pass, " << failed << " fail, " << kinks
                << " kink, " << bottoms << " undefined-consistent, " << inconclusive
                << " inconclusive; max rel err " << fmt_double(worst) << "\n";
    if (failed) any_fail = true;
  }
  return any_fail ? kExitTolerance : 0;
}

} // namespace

int main(int argc, char** argv) {
  ensure_default_ops();

  CLI::App app{"dual-numbers AD for a CBV language with recursive types"};
  app.require_subcommand(1);

  std::string path, entry, mode = "fwd", at, at_term, dir, out_path;
  std::vector<std::string> run_args;
  long fuel = kDefaultFuel;
  int trials = 100;
  double eps = 1e-6, tol = 1e-5, lo = -3.0, hi = 3.0;
  uint64_t seed = default_seed();
  bool target = false, json = false;

  auto* check_cmd = app.add_subcommand("check", "typecheck a program file");
  check_cmd->add_option("file", path)->required();
  check_cmd->add_flag("--target", target, "check in target-language mode");

  auto* ad_cmd = app.add_subcommand("ad", "apply the AD macro and print the target program");
  ad_cmd->add_option("file", path)->required();
  ad_cmd->add_option("--mode", mode, "fwd or rev (recorded in the output header)")
      ->check(CLI::IsMember({"fwd", "rev"}));
  ad_cmd->add_option("-o,--output", out_path, "write to a file instead of stdout");

  auto* run_cmd = app.add_subcommand("run", "evaluate the entry definition");
  run_cmd->add_option("file", path)->required();
  run_cmd->add_option("args", run_args, "argument terms applied in order");
  run_cmd->add_option("--entry", entry, "definition to run (default: main or last)");
  run_cmd->add_option("--fuel", fuel);
  run_cmd->add_flag("--target", target, "evaluate a target-language file");

  auto* jvp_cmd = app.add_subcommand("jvp", "forward-mode directional derivative");
  jvp_cmd->add_option("file", path)->required();
  jvp_cmd->add_option("--entry", entry);
  jvp_cmd->add_option("--at", at, "input slots, comma separated");
  jvp_cmd->add_option("--at-term", at_term, "input as a value term");
  jvp_cmd->add_option("--dir", dir, "direction, comma separated (default all ones)");
  jvp_cmd->add_option("--fuel", fuel);

  auto* grad_cmd = app.add_subcommand("grad", "reverse-mode derivative rows");
  grad_cmd->add_option("file", path)->required();
  grad_cmd->add_option("--entry", entry);
  grad_cmd->add_option("--at", at);
  grad_cmd->add_option("--at-term", at_term);
  grad_cmd->add_option("--fuel", fuel);

  auto* verify_cmd = app.add_subcommand("verify", "check the AD macro against finite differences");
  verify_cmd->add_option("file", path)->required();
  verify_cmd->add_option("--trials", trials);
  verify_cmd->add_option("--eps", eps);
  verify_cmd->add_option("--tol", tol);
  verify_cmd->add_option("--seed", seed);
  verify_cmd->add_option("--fuel", fuel);
  verify_cmd->add_option("--lo", lo, "sampling lower bound for real slots");
  verify_cmd->add_option("--hi", hi, "sampling upper bound for real slots");
  verify_cmd->add_flag("--json", json, "emit one JSON report per trial");

  CLI11_PARSE(app, argc, argv);

  try {
    if (check_cmd->parsed()) return cmd_check(path, target);
    if (ad_cmd->parsed()) return cmd_ad(path, mode, out_path);
    if (run_cmd->parsed()) return cmd_run(path, run_args, entry, fuel, target);
    if (jvp_cmd->parsed()) return cmd_jvp(path, entry, at, at_term, dir, fuel);
    if (grad_cmd->parsed()) return cmd_grad(path, entry, at, at_term, fuel);
    if (verify_cmd->parsed()) return cmd_verify(path, trials, eps, tol, seed, fuel, json, lo, hi);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitParse;
  }
  return 0;
}
