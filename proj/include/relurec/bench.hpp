#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "eval.hpp"
#include "hardness.hpp"
#include "robust.hpp"
#include "worstcase.hpp"

namespace relurec {

struct CriterionResult {
  std::string id;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

using CriterionFn = std::function<CriterionResult(SeedStream)>;

struct Criterion {
  std::string id;
  CriterionFn run;
};

namespace detail {

inline std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

inline SeedStream trial_stream(const SeedStream& base, int t) { return base.child(static_cast<std::uint64_t>(t)); }

}  // namespace detail

inline CriterionResult ac1_worstcase(SeedStream base) {
  auto t0 = std::chrono::steady_clock::now();
  int ok = 0;
  const int trials = 20;
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    SeedStream st = detail::trial_stream(base, t);
    auto g = generate_weights(3, 2, 4, 2.0, st);
    auto ins = generate_instance(g.weights, Activation::relu(), 30, NoiseModel::none(), st);
    try {
      NetworkWeights w = exact_neural_net(ins.a, ins.x, 2);
      MatchResult m = match_weights(w, g.weights, Activation::relu(), {false, &ins.x, &ins.a});
      double err = std::max(m.v_error, m.u_error);
      worst = std::max(worst, err);
      if (m.functional_rel <= 1e-6 && err <= 1e-6) ++ok;
    } catch (const Error&) {
    }
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CriterionResult r{"AC-1", ok >= 19 && secs <= 60.0, "", secs};
  r.detail = std::to_string(ok) + "/20 exact, max matched error " + detail::fmt("%.2e", worst) + ", " +
             detail::fmt("%.1f", secs) + " s (need >= 19, <= 60 s)";
  return r;
}

inline CriterionResult ac2_signs_exact(SeedStream base) {
  int ok = 0, ambiguous = 0;
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    SeedStream st = detail::trial_stream(base, t);
    auto g = generate_weights(5, 3, 8, 2.0, st);
    auto ins = generate_instance(g.weights, Activation::relu(), 2000, NoiseModel::none(), st);
    auto init = init_oracle(g.weights, 1e-5, st);
    RecoveryConfig cfg;
    cfg.ell = 2000;
    try {
      auto out = recover_signs_exact_full(ins.a, ins.x, init.rows, cfg);
      double e = 0.0;
      bool signs = true;
      for (Index i = 0; i < 3; ++i) {
        e = std::max(e, (out.v.row(i) - g.weights.v.row(i)).norm());
        signs = signs && out.signs.xi[static_cast<std::size_t>(i)] == static_cast<int>(init.eigenvalues[static_cast<std::size_t>(i)]);
      }
      worst = std::max(worst, e);
      if (e <= 1e-8 && signs) ++ok;
    } catch (const Error& err) {
      if (err.kind() == ErrorKind::AmbiguousSign) ++ambiguous;
    }
  }
  CriterionResult r{"AC-2", ok >= 19 && ambiguous == 0, "", 0};
  r.detail = std::to_string(ok) + "/20 within 1e-8 (max " + detail::fmt("%.2e", worst) + "), AmbiguousSign raised " +
             std::to_string(ambiguous) + " times";
  return r;
}

inline CriterionResult ac3_orthonormal(SeedStream base) {
  int ok = 0;
  for (int t = 0; t < 10; ++t) {
    SeedStream st = detail::trial_stream(base, t);
    auto g = generate_weights(4, 2, 6, 1.0, st);
    auto ins = generate_instance(g.weights, Activation::relu(), 200000, NoiseModel::none(), st);
    try {
      auto w = recover_orthonormal(ins.a, ins.x, 2, {}, st);
      auto m = match_weights(w, g.weights);
      if (m.v_error <= 1e-6 && m.u_error <= 1e-6) ++ok;
    } catch (const Error&) {
    }
  }
  return {"AC-3", ok >= 8, std::to_string(ok) + "/10 exact (need >= 8)", 0};
}

inline CriterionResult ac4_tensor_init(SeedStream base) {
  int ok[2] = {0, 0};
  double worst[2] = {0, 0};
  for (int relu = 0; relu < 2; ++relu) {
    Activation f = relu ? Activation::relu() : Activation::power(2.0);
    const double tol = relu ? 0.1 : 0.05;
    for (int t = 0; t < 10; ++t) {
      SeedStream st = detail::trial_stream(base.child(relu ? "relu" : "square"), t);
      auto g = generate_weights(4, 2, 6, 2.0, st);
      auto ins = generate_instance(g.weights, f, 200000, NoiseModel::none(), st);
      try {
        auto rep = init_tensor(ins.a, ins.x, 2, f, {}, st);
        MatchOptions mo;
        mo.sign_aware = true;
        double e = max_row_error(match_weights({g.weights.u, rep.rows}, g.weights, f, mo));
        worst[relu] = std::max(worst[relu], e);
        if (e <= tol) ++ok[relu];
      } catch (const Error&) {
      }
    }
  }
  CriterionResult r{"AC-4", ok[0] >= 8 && ok[1] >= 7, "", 0};
  r.detail = "x^2: " + std::to_string(ok[0]) + "/10 <= 0.05 (max " + detail::fmt("%.3f", worst[0]) + "), relu: " +
             std::to_string(ok[1]) + "/10 <= 0.1 (max " + detail::fmt("%.3f", worst[1]) + ")";
  return r;
}

inline CriterionResult ac5_noisy(SeedStream base) {
  int ok = 0;
  for (int t = 0; t < 20; ++t) {
    SeedStream st = detail::trial_stream(base, t);
    auto g = generate_weights(6, 3, 8, 2.0, st);
    auto ins = generate_instance(g.weights, Activation::relu(), 50000, NoiseModel::iid(0.1), st);
    auto init = init_oracle(g.weights, 1e-4, st);
    RecoveryConfig cfg;
    cfg.ell = 50000;
    SignResolution sr;
    try {
      auto w = finish_noisy(ins.a, ins.x, init.rows, cfg, Activation::relu(), &sr);
      bool signs = true;
      for (std::size_t i = 0; i < 3; ++i) signs = signs && sr.xi[i] == static_cast<int>(init.eigenvalues[i]);
      if (signs && (w.u - g.weights.u).norm() <= 0.05) ++ok;
    } catch (const Error&) {
    }
  }
  std::vector<double> small, large;
  SeedStream rate = base.child("rate");
  for (int t = 0; t < 10; ++t) {
    SeedStream st = detail::trial_stream(rate, t);
    auto g = generate_weights(6, 3, 8, 2.0, st);
    auto ins = generate_instance(g.weights, Activation::relu(), 50000, NoiseModel::iid(0.1), st);
    auto init = init_oracle(g.weights, 1e-4, st);
    for (Index n : {Index{5000}, Index{50000}}) {
      RecoveryConfig cfg;
      cfg.ell = n;
      Matrix a = ins.a.leftCols(n), x = ins.x.leftCols(n);
      double e = std::numeric_limits<double>::infinity();
      try {
        e = (finish_noisy(a, x, init.rows, cfg, Activation::relu()).u - g.weights.u).norm();
      } catch (const Error&) {
      }
      (n == 5000 ? small : large).push_back(e);
    }
  }
  double ms = detail::median(small), ml = detail::median(large);
  CriterionResult r{"AC-5", ok >= 18 && ml <= 0.5 * ms, "", 0};
  r.detail = std::to_string(ok) + "/20 signs+U within 0.05; median U error " + detail::fmt("%.4f", ms) + " at n=5e3, " +
             detail::fmt("%.4f", ml) + " at n=5e4";
  return r;
}

inline CriterionResult ac6_fpt(SeedStream base) {
  int ok = 0;
  Matrix u(1, 2);
  u << 1.0, -1.0;
  for (int t = 0; t < 20; ++t) {
    SeedStream st = detail::trial_stream(base, t);
    WeightOptions wo;
    wo.u = u;
    auto g = generate_weights(1, 2, 3, 2.0, st, wo);
    auto ins = generate_instance(g.weights, Activation::relu(), 50000, NoiseModel::none(), st);
    try {
      auto w = fpt_exact_arbitrary_U(ins.a, ins.x, 2, Activation::relu(), st);
      auto m = match_weights(w, g.weights);
      if (m.v_error <= 1e-6 && m.u_error <= 1e-6) ++ok;
    } catch (const Error&) {
    }
  }
  return {"AC-6", ok >= 18, std::to_string(ok) + "/20 exact (need >= 18)", 0};
}

// Median over seeds of ||w_hat - v||^2 for the correlation learner on y = sign(f(vX) + G), ||G||_F / sqrt(n) = 0.5.
inline double halfspace_error(Index n, Index d, SeedStream base, int seeds) {
  std::vector<double> errs;
  for (int t = 0; t < seeds; ++t) {
    SeedStream st = detail::trial_stream(base, t);
    Vector v = random_unit(d, st);
    Matrix x = gaussian_matrix(d, n, 0.0, 1.0, st);
    RowVector pre = v.transpose() * x;
    RowVector g = gaussian_matrix(1, n, 0.0, 0.5, st);
    HalfspaceProblem p{x, sign_labels(pre.cwiseMax(0.0) + g), 1.0, 0.0};
    errs.push_back((learn_halfspace(p) - v).squaredNorm());
  }
  return detail::median(errs);
}

inline CriterionResult ac7_noisy_fpt(SeedStream base) {
  int ok = 0;
  double worst = 0.0;
  for (int t = 0; t < 10; ++t) {
    SeedStream st = detail::trial_stream(base, t);
    auto g = generate_weights(4, 2, 8, 2.0, st);
    auto ins = generate_instance(g.weights, Activation::relu(), 100000, NoiseModel::iid(0.3), st);
    SketchConfig sc;
    sc.stream = st.child("sketch");
    auto sk = sketch_output(ins.a, sc, 2);
    GuessGrid gg;
    gg.oracle_m = pinv(sk.s * g.weights.u);
    try {
      auto rep = fpt_noisy_recover_report(ins.a, ins.x, 2, gg, sc);
      double ratio = functional_error(ins.a, rep.weights, ins.x).first / ins.e.norm();
      worst = std::max(worst, ratio);
      if (ratio <= 1.1) ++ok;
    } catch (const Error&) {
    }
  }
  double e1 = halfspace_error(10000, 10, base.child("halfspace"), 10);
  double e4 = halfspace_error(40000, 10, base.child("halfspace"), 10);
  CriterionResult r{"AC-7", ok >= 8 && e4 <= 0.6 * e1, "", 0};
  r.detail = std::to_string(ok) + "/10 with residual <= 1.1 ||E||_F (max ratio " + detail::fmt("%.4f", worst) +
             "); halfspace error " + detail::fmt("%.2e", e1) + " -> " + detail::fmt("%.2e", e4) + " (n 1e4 -> 4e4)";
  return r;
}

inline CriterionResult ac8_sparse(SeedStream base) {
  int ok = 0;
  double worst = 0.0;
  for (int t = 0; t < 10; ++t) {
    SeedStream st = detail::trial_stream(base, t);
    WeightOptions wo;
    wo.orthonormal_u = true;
    auto g = generate_weights(30, 2, 6, 1.0, st, wo);
    auto ins = generate_instance(g.weights, Activation::relu(), 2000, NoiseModel::sparse(0.05, 10.0), st);
    Matrix clean = ins.a - ins.e;
    RpcaResult pcp;
    try {
      auto w = recover_sparse(ins.a, ins.x, 2, {}, st, Activation::relu(), &pcp);
      double le = (pcp.low_rank - clean).norm() / clean.norm();
      worst = std::max(worst, le);
      auto m = match_weights(w, g.weights);
      if (le <= 1e-4 && m.v_error <= 1e-6 && m.u_error <= 1e-6) ++ok;
      else if (std::getenv("RELUREC_TRACE")) std::fprintf(stderr, "AC-8 trial %d: low-rank %.3g v %.3g u %.3g\n", t, le, m.v_error, m.u_error);
    } catch (const Error& e) {
      if (std::getenv("RELUREC_TRACE")) std::fprintf(stderr, "AC-8 trial %d: %s\n", t, e.what());
    }
  }
  return {"AC-8", ok >= 8,
          std::to_string(ok) + "/10 with low-rank error <= 1e-4 and exact weights (max low-rank error " +
              detail::fmt("%.2e", worst) + ")",
          0};
}

inline CriterionResult ac9_hardness(SeedStream base) {
  SeedStream st = base.child("corpus");
  auto corpus = hardness_corpus(20, 3, st);
  int forward = 0, sat_count = 0, agree = 0;
  for (const auto& psi : corpus) {
    auto sat = brute_force_sat(psi);
    auto inst = reduce_sat_to_relusep(psi);
    if (sat) {
      ++sat_count;
      auto [x, y] = assignment_to_witness(*sat);
      if (verify_witness(inst, x, y).ok) ++forward;
    }
    try {
      auto found = brute_force_relusep(inst, 1000000);
      bool valid = !found || verify_witness(inst, found->first, found->second, 1e-7).ok;
      if (valid && found.has_value() == sat.has_value()) ++agree;
    } catch (const Error&) {
    }
  }
  CriterionResult r{"AC-9", forward == sat_count && agree == 20, "", 0};
  r.detail = "forward witnesses " + std::to_string(forward) + "/" + std::to_string(sat_count) +
             ", brute-force agreement " + std::to_string(agree) + "/20";
  return r;
}

inline CriterionResult ac11_kappa(SeedStream base) {
  double mean[3] = {0, 0, 0};
  const double as[3] = {0.01, 0.1, 1.0};
  for (int i = 0; i < 3; ++i) {
    for (int t = 0; t < 50; ++t) {
      SeedStream st = detail::trial_stream(base.child("mono"), t);
      mean[i] += kappa_probe(as[i], 10000, st) / 50.0;
    }
  }
  int zero = 0;
  for (int t = 0; t < 100; ++t) {
    SeedStream st = detail::trial_stream(base.child("small"), t);
    if (kappa_probe(0.01, 10, st) == 0.0) ++zero;
  }
  bool mono = mean[0] <= mean[1] && mean[1] <= mean[2];
  CriterionResult r{"AC-11", mono && zero >= 80, "", 0};
  r.detail = "mean fractions " + detail::fmt("%.4f", mean[0]) + ", " + detail::fmt("%.4f", mean[1]) + ", " +
             detail::fmt("%.4f", mean[2]) + "; identical outputs at a=0.01, n=10 on " + std::to_string(zero) + "/100";
  return r;
}

inline std::vector<Criterion> standard_criteria() {
  return {{"AC-1", ac1_worstcase}, {"AC-2", ac2_signs_exact}, {"AC-3", ac3_orthonormal}, {"AC-4", ac4_tensor_init},
          {"AC-5", ac5_noisy},     {"AC-6", ac6_fpt},         {"AC-7", ac7_noisy_fpt},   {"AC-8", ac8_sparse},
          {"AC-9", ac9_hardness},  {"AC-11", ac11_kappa}};
}

// Runs criteria on a worker pool. Each criterion gets a stream derived from the root seed and its id,
// so results do not depend on the thread count or on scheduling.
inline std::vector<CriterionResult> run_criteria(const std::vector<Criterion>& list, std::uint64_t root_seed,
                                                 unsigned threads) {
  std::vector<CriterionResult> out(list.size());
  std::atomic<std::size_t> next{0};
  SeedStream root(root_seed);
  auto worker = [&] {
    for (std::size_t i = next++; i < list.size(); i = next++) {
      auto t0 = std::chrono::steady_clock::now();
      try {
        out[i] = list[i].run(root.child(list[i].id));
      } catch (const std::exception& e) {
        out[i] = {list[i].id, false, std::string("error: ") + e.what(), 0};
      }
      out[i].id = list[i].id;
      out[i].seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(list.size(), 1))));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  return out;
}

inline void write_table(std::ostream& os, const std::vector<CriterionResult>& rows) {
  os << "criterion\tresult\tseconds\tdetail\n";
  for (const auto& r : rows)
    os << r.id << '\t' << (r.passed ? "PASS" : "FAIL") << '\t' << detail::fmt("%.2f", r.seconds) << '\t' << r.detail
       << '\n';
}

}  // namespace relurec
