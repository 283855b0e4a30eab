#pragma once

#include <array>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "model.hpp"

namespace relurec {

// Literals are signed 1-based variable indices: 3 is u_3, -3 is not u_3.
struct Cnf6 {
  std::size_t num_vars = 0;
  std::vector<std::array<int, 6>> clauses;

  void validate() const {
    for (const auto& c : clauses)
      for (int l : c)
        if (l == 0 || static_cast<std::size_t>(std::abs(l)) > num_vars)
          throw Error(ErrorKind::InvalidShape, "literal out of range");
  }
};

inline Cnf6 make_reversible(const Cnf6& psi) {
  psi.validate();
  Cnf6 out = psi;
  for (const auto& c : psi.clauses) {
    std::array<int, 6> r{};
    for (std::size_t i = 0; i < 6; ++i) r[i] = -c[i];
    out.clauses.push_back(r);
  }
  return out;
}

inline Cnf6 reverse_formula(const Cnf6& psi) {
  Cnf6 out = psi;
  for (auto& c : out.clauses)
    for (int& l : c) l = -l;
  return out;
}

inline bool satisfies(const Cnf6& psi, const std::vector<bool>& assignment) {
  for (const auto& c : psi.clauses) {
    bool sat = false;
    for (int l : c) {
      bool val = assignment[static_cast<std::size_t>(std::abs(l) - 1)];
      if ((l > 0) == val) {
        sat = true;
        break;
      }
    }
    if (!sat) return false;
  }
  return true;
}

inline std::optional<std::vector<bool>> brute_force_sat(const Cnf6& psi) {
  psi.validate();
  if (psi.num_vars > 24) throw Error(ErrorKind::BudgetExceeded, "too many variables for exhaustive search");
  const std::uint64_t total = std::uint64_t{1} << psi.num_vars;
  std::vector<bool> a(psi.num_vars);
  for (std::uint64_t mask = 0; mask < total; ++mask) {
    for (std::size_t i = 0; i < psi.num_vars; ++i) a[i] = (mask >> i) & 1u;
    if (satisfies(psi, a)) return a;
  }
  return std::nullopt;
}

// Clause lines of six signed integers terminated by 0; "c" comments and a "p cnf" header are accepted.
inline Cnf6 parse_dimacs(std::istream& is) {
  Cnf6 out;
  std::string line;
  std::vector<int> pending;
  std::size_t declared = 0;
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    std::string first;
    if (!(ls >> first) || first == "c" || first == "%") continue;
    if (first == "p") {
      std::string fmt;
      std::size_t nc = 0;
      if (!(ls >> fmt >> declared >> nc) || fmt != "cnf") throw Error(ErrorKind::InvalidShape, "bad DIMACS header");
      continue;
    }
    std::istringstream all(line);
    std::string tok;
    while (all >> tok) {
      char* end = nullptr;
      long v = std::strtol(tok.c_str(), &end, 10);
      if (*end != '\0') throw Error(ErrorKind::InvalidShape, "bad literal '" + tok + "'");
      if (v == 0) {
        if (pending.size() != 6) throw Error(ErrorKind::InvalidShape, "clauses must have exactly 6 literals");
        std::array<int, 6> c{};
        for (std::size_t i = 0; i < 6; ++i) {
          c[i] = pending[i];
          out.num_vars = std::max(out.num_vars, static_cast<std::size_t>(std::abs(pending[i])));
        }
        out.clauses.push_back(c);
        pending.clear();
      } else {
        pending.push_back(static_cast<int>(v));
      }
    }
  }
  if (!pending.empty()) throw Error(ErrorKind::InvalidShape, "unterminated clause");
  out.num_vars = std::max(out.num_vars, declared);
  out.validate();
  return out;
}

inline void write_dimacs(std::ostream& os, const Cnf6& psi) {
  os << "p cnf " << psi.num_vars << ' ' << psi.clauses.size() << '\n';
  for (const auto& c : psi.clauses) {
    for (int l : c) os << l << ' ';
    os << "0\n";
  }
}

struct ReluSepInstance {
  std::size_t dim = 0;
  std::vector<Vector> p_set;  // p^T x <= 0 and p^T y <= 0
  std::vector<Vector> q_set;  // f(q^T x) + f(q^T y) = 1
};

inline ReluSepInstance reduce_sat_to_relusep(const Cnf6& psi) {
  psi.validate();
  const Index n = static_cast<Index>(psi.num_vars);
  ReluSepInstance inst;
  inst.dim = static_cast<std::size_t>(n + 2);
  const Index dim = n + 2;
  auto unit = [&](Index i, double s) {
    Vector e = Vector::Zero(dim);
    e(i) = s;
    return e;
  };
  for (Index i = 0; i < n; ++i) {
    inst.q_set.push_back(unit(i, 1.0));
    inst.q_set.push_back(unit(i, -1.0));
  }
  inst.q_set.push_back(unit(n, 1.0));
  inst.q_set.push_back(unit(n + 1, 1.0));
  inst.q_set.push_back(unit(n, -2.0));
  inst.q_set.push_back(unit(n + 1, -2.0));
  Vector both = Vector::Zero(dim);
  both(n) = 1.0;
  both(n + 1) = 1.0;
  inst.q_set.push_back(both);
  for (const auto& c : psi.clauses) {
    Vector p = Vector::Zero(dim);
    for (int l : c) p(std::abs(l) - 1) += l > 0 ? -1.0 : 1.0;
    p(n) = -10.0;
    p(n + 1) = -10.0;
    inst.p_set.push_back(p);
  }
  return inst;
}

inline std::pair<Vector, Vector> assignment_to_witness(const std::vector<bool>& assignment) {
  const Index n = static_cast<Index>(assignment.size());
  Vector x(n + 2), y(n + 2);
  for (Index i = 0; i < n; ++i) {
    x(i) = assignment[static_cast<std::size_t>(i)] ? 1.0 : -1.0;
    y(i) = -x(i);
  }
  x(n) = 1.0;
  x(n + 1) = -0.5;
  y(n) = -0.5;
  y(n + 1) = 1.0;
  return {x, y};
}

struct WitnessCheck {
  bool ok = true;
  std::vector<std::string> violations;
};

inline WitnessCheck verify_witness(const ReluSepInstance& inst, const Vector& x, const Vector& y, double tol = 1e-9) {
  if (static_cast<std::size_t>(x.size()) != inst.dim || static_cast<std::size_t>(y.size()) != inst.dim)
    throw Error(ErrorKind::ShapeMismatch, "witness length differs from dim");
  WitnessCheck r;
  for (std::size_t i = 0; i < inst.p_set.size(); ++i) {
    double px = inst.p_set[i].dot(x), py = inst.p_set[i].dot(y);
    if (px > tol || py > tol) {
      r.ok = false;
      r.violations.push_back("p" + std::to_string(i) + ": " + std::to_string(px) + ", " + std::to_string(py));
    }
  }
  for (std::size_t i = 0; i < inst.q_set.size(); ++i) {
    double s = std::max(inst.q_set[i].dot(x), 0.0) + std::max(inst.q_set[i].dot(y), 0.0);
    if (std::abs(s - 1.0) > tol) {
      r.ok = false;
      r.violations.push_back("q" + std::to_string(i) + ": " + std::to_string(s));
    }
  }
  return r;
}

struct NetworkFeasibility {
  Matrix alpha;  // 1 x 2
  Matrix x;      // dim x (|P| + |Q|)
  Matrix a;      // 1 x (|P| + |Q|)
};

inline NetworkFeasibility reduce_relusep_to_network(const ReluSepInstance& inst) {
  const Index np = static_cast<Index>(inst.p_set.size()), nq = static_cast<Index>(inst.q_set.size());
  NetworkFeasibility out;
  out.alpha = Matrix::Ones(1, 2);
  out.x.resize(static_cast<Index>(inst.dim), np + nq);
  out.a.resize(1, np + nq);
  for (Index j = 0; j < np; ++j) {
    out.x.col(j) = inst.p_set[static_cast<std::size_t>(j)];
    out.a(0, j) = 0.0;
  }
  for (Index j = 0; j < nq; ++j) {
    out.x.col(np + j) = inst.q_set[static_cast<std::size_t>(j)];
    out.a(0, np + j) = 1.0;
  }
  return out;
}

// DFS over the active-side case of each q (both positive with sum 1, or exactly one side equal to 1),
// pruning with an LP feasibility check; the budget counts LP solves.
inline std::optional<std::pair<Vector, Vector>> brute_force_relusep(const ReluSepInstance& inst, std::size_t budget) {
  if (budget == 0) throw Error(ErrorKind::BudgetExceeded, "zero budget");
  const Index dim = static_cast<Index>(inst.dim);
  const std::size_t nq = inst.q_set.size();
  LinearProgram base(static_cast<std::size_t>(2 * dim));
  for (const auto& p : inst.p_set) {
    Vector c = Vector::Zero(2 * dim);
    c.head(dim) = p;
    base.add(c, Relation::LessEq, 0.0);
    c.setZero();
    c.tail(dim) = p;
    base.add(c, Relation::LessEq, 0.0);
  }
  std::size_t used = 0;
  std::optional<Vector> found;
  std::function<bool(std::size_t, const LinearProgram&)> dfs = [&](std::size_t i, const LinearProgram& lp) -> bool {
    if (++used > budget) throw Error(ErrorKind::BudgetExceeded, "LP budget exhausted");
    auto sol = lp_feasible(lp);
    if (!sol) return false;
    if (i == nq) {
      found = sol;
      return true;
    }
    const Vector& q = inst.q_set[i];
    Vector cx = Vector::Zero(2 * dim), cy = Vector::Zero(2 * dim), cs(2 * dim);
    cx.head(dim) = q;
    cy.tail(dim) = q;
    cs << q, q;
    for (int branch = 0; branch < 3; ++branch) {
      LinearProgram next = lp;
      if (branch == 0) {
        next.add(cx, Relation::GreaterEq, 0.0);
        next.add(cy, Relation::GreaterEq, 0.0);
        next.add(cs, Relation::Equal, 1.0);
      } else if (branch == 1) {
        next.add(cx, Relation::Equal, 1.0);
        next.add(cy, Relation::LessEq, 0.0);
      } else {
        next.add(cy, Relation::Equal, 1.0);
        next.add(cx, Relation::LessEq, 0.0);
      }
      if (dfs(i + 1, next)) return true;
    }
    return false;
  };
  if (!dfs(0, base)) return std::nullopt;
  return std::make_pair(Vector(found->head(dim)), Vector(found->tail(dim)));
}

// Small reversible formulas over n <= max_vars variables for completeness checks.
inline std::vector<Cnf6> hardness_corpus(std::size_t count, std::size_t max_vars, SeedStream& stream) {
  std::vector<Cnf6> out;
  for (std::size_t f = 0; f < count; ++f) {
    Cnf6 psi;
    psi.num_vars = 1 + static_cast<std::size_t>(stream.uniform_index(max_vars));
    std::size_t nc = 1 + static_cast<std::size_t>(stream.uniform_index(3));
    for (std::size_t c = 0; c < nc; ++c) {
      std::array<int, 6> cl{};
      // a single-polarity clause on one variable forces it; mixing these makes some formulas unsatisfiable
      bool unit = stream.uniform() < 0.5;
      int v0 = 1 + static_cast<int>(stream.uniform_index(psi.num_vars));
      int s0 = stream.rademacher() > 0 ? 1 : -1;
      for (auto& l : cl) {
        if (unit) {
          l = s0 * v0;
        } else {
          int v = 1 + static_cast<int>(stream.uniform_index(psi.num_vars));
          l = stream.rademacher() > 0 ? v : -v;
        }
      }
      psi.clauses.push_back(cl);
    }
    out.push_back(make_reversible(psi));
  }
  return out;
}

}  // namespace relurec
