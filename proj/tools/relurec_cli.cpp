// relurec: generate instances, recover weights, evaluate, run the benchmark table, and the hardness toolchain.
#include <CLI11.hpp>
#include <json.hpp>

#include <relurec/bench.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace relurec;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string algo;
  std::string out = "out";
  unsigned threads = 1;
  std::optional<double> tol;
};

json read_json(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw UsageError("cannot read " + path);
  try {
    return json::parse(is);
  } catch (const json::exception& e) {
    throw UsageError(path + ": " + e.what());
  }
}

// flags override config-file keys, which override defaults
json effective_config(const Flags& fl, json defaults) {
  json cfg = defaults;
  if (!fl.config.empty()) cfg.merge_patch(read_json(fl.config));
  if (fl.seed) cfg["seed"] = *fl.seed;
  if (!fl.algo.empty()) cfg["algo"] = fl.algo;
  if (fl.tol) cfg["tol"] = *fl.tol;
  cfg["threads"] = fl.threads;
  return cfg;
}

std::uint64_t need_seed(const json& cfg) {
  if (!cfg.contains("seed") || cfg["seed"].is_null()) throw UsageError("a seed is required (--seed or \"seed\" key)");
  return cfg["seed"].get<std::uint64_t>();
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw UsageError("cannot create " + dir + ": " + ec.message());
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw UsageError("cannot write " + p.string());
  os << text;
}

void write_manifest(const fs::path& dir, const json& m) { write_text(dir / "manifest.json", m.dump(2) + "\n"); }

Matrix load(const fs::path& p) {
  if (!fs::exists(p)) throw UsageError("missing file " + p.string());
  return load_matrix(p.string());
}

// An instance is a directory holding manifest.json, or the manifest path itself.
struct LoadedInstance {
  fs::path dir;
  json manifest;
  Matrix x, a;
  std::optional<NetworkWeights> truth;
  Activation f;
  Index k = 0;
};

LoadedInstance load_instance(const std::string& where) {
  fs::path p(where);
  if (fs::is_directory(p)) p /= "manifest.json";
  LoadedInstance li;
  li.dir = p.parent_path();
  li.manifest = read_json(p.string());
  const json& c = li.manifest.at("config");
  li.k = c.at("k").get<Index>();
  li.f = activation_from_name(c.value("activation", "relu"));
  li.x = load(li.dir / "X.txt");
  li.a = load(li.dir / "A.txt");
  if (fs::exists(li.dir / "U.txt") && fs::exists(li.dir / "V.txt"))
    li.truth = NetworkWeights{load(li.dir / "U.txt"), load(li.dir / "V.txt")};
  return li;
}

NoiseModel noise_from(const json& n) {
  std::string kind = n.value("kind", "none");
  if (kind == "none") return NoiseModel::none();
  if (kind == "iid") {
    std::string dist = n.value("dist", "gaussian");
    return NoiseModel::iid(n.value("sigma", 0.0), dist == "rademacher" ? NoiseDist::Rademacher : NoiseDist::Gaussian);
  }
  if (kind == "sparse") return NoiseModel::sparse(n.value("fraction", 0.0), n.value("magnitude", 0.0));
  throw UsageError("unknown noise kind '" + kind + "'");
}

json gen_defaults() {
  return {{"m", 3},     {"k", 2},
          {"d", 4},     {"n", 30},
          {"kappa", 2.0}, {"activation", "relu"},
          {"u_mode", "gaussian"}, {"noise", {{"kind", "none"}}}};
}

int cmd_gen(const Flags& fl) {
  json cfg = effective_config(fl, gen_defaults());
  std::uint64_t seed = need_seed(cfg);
  const Index m = cfg["m"].get<Index>(), k = cfg["k"].get<Index>(), d = cfg["d"].get<Index>(),
              n = cfg["n"].get<Index>();
  SeedStream st(seed);
  WeightOptions wo;
  std::string umode = cfg["u_mode"].get<std::string>();
  if (umode == "orthonormal") wo.orthonormal_u = true;
  else if (umode == "rank_deficient") wo.allow_rank_deficient_u = true;
  else if (umode == "fixed") {
    auto rows = cfg.at("u").get<std::vector<std::vector<double>>>();
    Matrix u(static_cast<Index>(rows.size()), rows.empty() ? 0 : static_cast<Index>(rows[0].size()));
    for (Index i = 0; i < u.rows(); ++i)
      for (Index j = 0; j < u.cols(); ++j) u(i, j) = rows.at(static_cast<std::size_t>(i)).at(static_cast<std::size_t>(j));
    wo.u = u;
  } else if (umode != "gaussian") {
    throw UsageError("unknown u_mode '" + umode + "'");
  }
  auto g = generate_weights(m, k, d, cfg["kappa"].get<double>(), st, wo);
  Activation f = activation_from_name(cfg["activation"].get<std::string>());
  Instance ins = generate_instance(g.weights, f, n, noise_from(cfg["noise"]), st);

  ensure_dir(fl.out);
  fs::path out(fl.out);
  save_matrix((out / "X.txt").string(), ins.x);
  save_matrix((out / "A.txt").string(), ins.a);
  save_matrix((out / "E.txt").string(), ins.e);
  save_matrix((out / "U.txt").string(), g.weights.u);
  save_matrix((out / "V.txt").string(), g.weights.v);
  json man = {{"command", "gen"},
              {"config", cfg},
              {"files", {"X.txt", "A.txt", "E.txt", "U.txt", "V.txt"}},
              {"kappa_v", g.kappa_v},
              {"noise", ins.noise.describe()}};
  write_manifest(out, man);
  std::cout << "wrote instance to " << out.string() << "\n";
  return 0;
}

NetworkWeights run_algorithm(const std::string& algo, const LoadedInstance& li, const json& cfg, SeedStream& st) {
  RecoveryConfig rc;
  if (cfg.contains("tol")) rc.accept_rel = cfg["tol"].get<double>();
  if (cfg.contains("ell")) rc.ell = cfg["ell"].get<Index>();
  if (algo == "worstcase") {
    WorstCaseOptions wo;
    if (cfg.contains("tol")) wo.accept_rel = cfg["tol"].get<double>();
    return exact_neural_net(li.a, li.x, li.k, wo);
  }
  if (algo == "exact") return recover_exact(li.a, li.x, li.k, rc, st, li.f);
  if (algo == "orthonormal-ica") return recover_orthonormal(li.a, li.x, li.k, rc, st, li.f);
  if (algo == "noisy") return recover_noisy(li.a, li.x, li.k, rc, st, li.f);
  if (algo == "fpt-u") return fpt_exact_arbitrary_U(li.a, li.x, li.k, li.f, st);
  if (algo == "fpt-noise") {
    SketchConfig sc;
    sc.stream = st.child("sketch");
    GuessGrid gg;
    gg.kappa_guess = cfg.value("kappa_guess", 1.0);
    gg.sigma_min_guess = cfg.value("sigma_min_guess", 1.0);
    if (cfg.value("oracle_m", false)) {
      if (!li.truth) throw UsageError("oracle_m needs U.txt next to the instance");
      gg.oracle_m = pinv(sketch_output(li.a, sc, li.k).s * li.truth->u);
    }
    return fpt_noisy_recover(li.a, li.x, li.k, gg, sc, li.f);
  }
  if (algo == "sparse") {
    SparseRecoveryConfig sc;
    sc.recovery = rc;
    if (cfg.contains("lambda")) sc.pcp.lambda = cfg["lambda"].get<double>();
    return recover_sparse(li.a, li.x, li.k, sc, st, li.f);
  }
  throw UsageError("unknown algorithm '" + algo + "'");
}

std::string metrics_text(const LoadedInstance& li, const NetworkWeights& w) {
  std::ostringstream os;
  if (li.truth) {
    MatchOptions mo;
    mo.x = &li.x;
    mo.a = &li.a;
    write_report(os, match_weights(w, *li.truth, li.f, mo));
  } else {
    auto [abs, rel] = functional_error(li.a, w, li.x, li.f);
    os << "functional_error " << detail::fmt("%.17g", abs) << "\nfunctional_rel " << detail::fmt("%.17g", rel) << "\n";
  }
  return os.str();
}

int cmd_recover(const Flags& fl) {
  json cfg = effective_config(fl, {{"algo", "exact"}});
  std::uint64_t seed = need_seed(cfg);
  if (!cfg.contains("instance")) throw UsageError("recover needs an \"instance\" key (directory or manifest path)");
  LoadedInstance li = load_instance(cfg["instance"].get<std::string>());
  std::string algo = cfg["algo"].get<std::string>();
  SeedStream st(seed);
  NetworkWeights w = run_algorithm(algo, li, cfg, st);
  ensure_dir(fl.out);
  fs::path out(fl.out);
  save_matrix((out / "U_hat.txt").string(), w.u);
  save_matrix((out / "V_hat.txt").string(), w.v);
  std::string report = "algorithm " + algo + "\n" + metrics_text(li, w);
  write_text(out / "report.txt", report);
  write_manifest(out, {{"command", "recover"}, {"config", cfg}, {"files", {"U_hat.txt", "V_hat.txt", "report.txt"}}});
  std::cout << report;
  return 0;
}

int cmd_eval(const Flags& fl) {
  json cfg = effective_config(fl, json::object());
  if (!cfg.contains("instance") || !cfg.contains("weights"))
    throw UsageError("eval needs \"instance\" and \"weights\" keys");
  LoadedInstance li = load_instance(cfg["instance"].get<std::string>());
  fs::path wd(cfg["weights"].get<std::string>());
  NetworkWeights w{load(wd / "U_hat.txt"), load(wd / "V_hat.txt")};
  std::string text = metrics_text(li, w);
  ensure_dir(fl.out);
  write_text(fs::path(fl.out) / "metrics.txt", text);
  write_manifest(fl.out, {{"command", "eval"}, {"config", cfg}, {"files", {"metrics.txt"}}});
  std::cout << text;
  return 0;
}

int cmd_bench(const Flags& fl) {
  json cfg = effective_config(fl, json::object());
  std::uint64_t seed = need_seed(cfg);
  std::vector<std::string> wanted;
  if (cfg.contains("criteria")) wanted = cfg["criteria"].get<std::vector<std::string>>();
  else
    for (const auto& c : standard_criteria()) wanted.push_back(c.id);
  std::vector<Criterion> list;
  for (const auto& id : wanted) {
    bool found = false;
    for (const auto& c : standard_criteria())
      if (c.id == id) {
        list.push_back(c);
        found = true;
      }
    if (!found) throw UsageError("unknown criterion '" + id + "'");
  }
  auto rows = run_criteria(list, seed, fl.threads);
  std::ostringstream os;
  write_table(os, rows);
  ensure_dir(fl.out);
  write_text(fs::path(fl.out) / "bench.tsv", os.str());
  write_manifest(fl.out, {{"command", "bench"}, {"config", cfg}, {"files", {"bench.tsv"}}});
  std::cout << os.str();
  return 0;
}

void save_sets(const fs::path& out, const ReluSepInstance& inst) {
  auto stack = [&](const std::vector<Vector>& vs) {
    Matrix m(static_cast<Index>(inst.dim), static_cast<Index>(vs.size()));
    for (std::size_t i = 0; i < vs.size(); ++i) m.col(static_cast<Index>(i)) = vs[i];
    return m;
  };
  save_matrix((out / "P.txt").string(), stack(inst.p_set));
  save_matrix((out / "Q.txt").string(), stack(inst.q_set));
}

ReluSepInstance load_sets(const fs::path& dir) {
  Matrix p = load(dir / "P.txt"), q = load(dir / "Q.txt");
  if (p.rows() != q.rows()) throw UsageError("P and Q dimensions differ");
  ReluSepInstance inst;
  inst.dim = static_cast<std::size_t>(p.rows());
  for (Index j = 0; j < p.cols(); ++j) inst.p_set.push_back(p.col(j));
  for (Index j = 0; j < q.cols(); ++j) inst.q_set.push_back(q.col(j));
  return inst;
}

// mode "reduce": CNF file -> P, Q, network feasibility matrices (and a witness when satisfiable by brute force)
// mode "verify": instance directory + witness x, y -> exit 0 when valid, 3 otherwise
int cmd_hardness(const Flags& fl) {
  json cfg = effective_config(fl, {{"mode", "reduce"}});
  std::string mode = cfg["mode"].get<std::string>();
  double tol = cfg.value("tol", 1e-9);
  if (mode == "reduce") {
    if (!cfg.contains("cnf")) throw UsageError("reduce needs a \"cnf\" key");
    std::ifstream is(cfg["cnf"].get<std::string>());
    if (!is) throw UsageError("cannot read " + cfg["cnf"].get<std::string>());
    Cnf6 psi = parse_dimacs(is);
    if (cfg.value("make_reversible", true)) psi = make_reversible(psi);
    ReluSepInstance inst = reduce_sat_to_relusep(psi);
    NetworkFeasibility net = reduce_relusep_to_network(inst);
    ensure_dir(fl.out);
    fs::path out(fl.out);
    save_sets(out, inst);
    save_matrix((out / "alpha.txt").string(), net.alpha);
    save_matrix((out / "X.txt").string(), net.x);
    save_matrix((out / "A.txt").string(), net.a);
    std::ostringstream cnf;
    write_dimacs(cnf, psi);
    write_text(out / "formula.cnf", cnf.str());
    json files = {"P.txt", "Q.txt", "alpha.txt", "X.txt", "A.txt", "formula.cnf"};
    json man = {{"command", "hardness"}, {"config", cfg}, {"variables", psi.num_vars}, {"clauses", psi.clauses.size()}};
    if (psi.num_vars <= 20) {
      auto sat = brute_force_sat(psi);
      man["satisfiable"] = sat.has_value();
      if (sat) {
        auto [x, y] = assignment_to_witness(*sat);
        save_matrix((out / "witness_x.txt").string(), x);
        save_matrix((out / "witness_y.txt").string(), y);
        files.push_back("witness_x.txt");
        files.push_back("witness_y.txt");
      }
    }
    man["files"] = files;
    write_manifest(out, man);
    std::cout << "wrote reduction to " << out.string() << "\n";
    return 0;
  }
  if (mode == "verify") {
    if (!cfg.contains("instance") || !cfg.contains("x") || !cfg.contains("y"))
      throw UsageError("verify needs \"instance\", \"x\" and \"y\" keys");
    ReluSepInstance inst = load_sets(cfg["instance"].get<std::string>());
    Vector x = load(cfg["x"].get<std::string>()), y = load(cfg["y"].get<std::string>());
    WitnessCheck wc = verify_witness(inst, x, y, tol);
    std::cout << (wc.ok ? "valid" : "invalid") << "\n";
    for (const auto& v : wc.violations) std::cout << "  " << v << "\n";
    return wc.ok ? 0 : 3;
  }
  throw UsageError("unknown hardness mode '" + mode + "'");
}

int cmd_selftest(const Flags& fl) {
  json cfg = effective_config(fl, {{"seed", 1}});
  std::vector<Criterion> quick;
  for (const auto& c : standard_criteria())
    if (c.id == "AC-1" || c.id == "AC-2" || c.id == "AC-9" || c.id == "AC-11") quick.push_back(c);
  auto rows = run_criteria(quick, need_seed(cfg), fl.threads);
  write_table(std::cout, rows);
  for (const auto& r : rows)
    if (!r.passed) return 3;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"relurec: weight recovery for one-hidden-layer rectified networks"};
  app.require_subcommand(1);
  Flags fl;
  std::uint64_t seed = 0;
  double tol = 0;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", fl.config, "JSON config file");
    sub->add_option("--seed", seed, "root seed");
    sub->add_option("--algo", fl.algo, "worstcase | exact | orthonormal-ica | noisy | fpt-u | fpt-noise | sparse");
    sub->add_option("--out", fl.out, "output directory");
    sub->add_option("--threads", fl.threads, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--tol", tol, "acceptance tolerance");
  };
  std::map<std::string, int (*)(const Flags&)> cmds = {{"gen", cmd_gen},         {"recover", cmd_recover},
                                                       {"eval", cmd_eval},       {"bench", cmd_bench},
                                                       {"hardness", cmd_hardness}, {"selftest", cmd_selftest}};
  std::map<std::string, CLI::App*> subs;
  const std::map<std::string, std::string> about = {
      {"gen", "generate a planted instance"},
      {"recover", "recover U, V from an instance"},
      {"eval", "score recovered weights against the planted ones"},
      {"bench", "run acceptance criteria and write bench.tsv"},
      {"hardness", "reduce a 6-CNF to ReLU separation, or verify a witness"},
      {"selftest", "run a fast subset of the criteria"}};
  for (const auto& [name, fn] : cmds) subs[name] = app.add_subcommand(name, about.at(name)), add_common(subs[name]);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  for (const auto& [name, sub] : subs) {
    if (!sub->parsed()) continue;
    if (sub->count("--seed")) fl.seed = seed;
    if (sub->count("--tol")) fl.tol = tol;
    try {
      return cmds[name](fl);
    } catch (const UsageError& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 2;
    } catch (const Error& e) {
      std::cerr << "error: " << e.what() << "\n";
      return exit_code_for(e.kind());
    } catch (const json::exception& e) {
      std::cerr << "error: bad config value: " << e.what() << "\n";
      return 2;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 4;
    }
  }
  return 2;
}
