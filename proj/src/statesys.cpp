#include "gks/statesys.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <utility>

#include "gks/harmonic.hpp"

namespace gks {

namespace {

unsigned lowest(SubsetMask s) { return static_cast<unsigned>(std::countr_zero(s)); }
unsigned size_of(SubsetMask s) { return static_cast<unsigned>(std::popcount(s)); }

/// Position of subset x among the subsets of mask, in the order produced by
/// the (sub - mask) & mask enumeration.
std::uint32_t compress(SubsetMask x, SubsetMask mask) {
  std::uint32_t out = 0;
  std::uint32_t bit = 1;
  for (; mask != 0; mask &= mask - 1, bit <<= 1) {
    if (x & mask & (~mask + 1)) out |= bit;
  }
  return out;
}

SubsetMask next_subset(SubsetMask sub, SubsetMask mask) { return (sub - mask) & mask; }

void validate_k(unsigned k, unsigned limit, const char* mode) {
  if (k > limit) {
    throw std::invalid_argument(std::string(mode) + " solve supports k <= " + std::to_string(limit) + ", got " +
                                std::to_string(k));
  }
}

// Row S in eliminated form:
//   diag h(S) - down h(S - min S) - sum_{U > S} super[U] h(U) = rhs
// super is indexed by compress(U \ S, full \ S).
struct Row {
  Rational diag;
  Rational rhs;
  std::vector<Rational> super;
};

// h(S) = constant + sum_{U >= S \ e, U within bits above e} weight[U] h(U)
struct Solved {
  Rational constant;
  std::vector<Rational> weight;  // indexed by compress(U \ (S \ e), above \ (S \ e))
};

std::vector<Rational> solve_exact(unsigned k, const std::vector<Rational>& p) {
  const SubsetMask full = (SubsetMask{1} << k) - 1;
  const std::size_t n = std::size_t{1} << k;

  std::vector<Row> rows(n);
  for (SubsetMask s = 1; s <= full; ++s) {
    Row& row = rows[s];
    const SubsetMask free = full & ~s;
    row.super.resize(std::size_t{1} << size_of(free));
    row.diag = p[lowest(s)];
    row.rhs = Rational(1);
    for (unsigned j = 0; j < k; ++j) {
      if (s >> j & 1U) continue;
      row.diag += p[j];
      row.super[compress(SubsetMask{1} << j, free)] = p[j];
    }
  }

  std::vector<Solved> solved(n);
  for (unsigned e = 0; e < k; ++e) {
    const SubsetMask bit_e = SubsetMask{1} << e;
    const SubsetMask above = full & ~((bit_e << 1) - 1);

    // Rows with min element e only couple to their own supersets (which
    // also have min e) and to S \ e; supersets come first numerically.
    for (SubsetMask rest = above;; rest = (rest - 1) & above) {
      const SubsetMask s = rest | bit_e;
      const Row& row = rows[s];
      const SubsetMask free = above & ~rest;
      Solved& out = solved[s];
      out.weight.assign(std::size_t{1} << size_of(free), Rational());
      out.constant = row.rhs;
      if (rest != 0) out.weight[0] += p[e];
      const SubsetMask row_free = full & ~s;
      for (SubsetMask x = free; x != 0; x = (x - 1) & free) {
        const Rational& g = row.super[compress(x, row_free)];
        if (g.is_zero()) continue;
        const Solved& sup = solved[s | x];
        out.constant.add_mul(g, sup.constant);
        const SubsetMask sup_free = free & ~x;
        std::uint32_t idx = 0;
        SubsetMask sub = 0;
        do {
          const Rational& w = sup.weight[idx++];
          if (!w.is_zero()) out.weight[compress(x | sub, free)].add_mul(g, w);
          sub = next_subset(sub, sup_free);
        } while (sub != 0);
      }
      if (row.diag.is_zero()) throw SolverError("exact solve: zero pivot at subset " + std::to_string(s), 0.0, e);
      const Rational inv = row.diag.reciprocal();
      out.constant *= inv;
      for (auto& w : out.weight) {
        if (!w.is_zero()) w *= inv;
      }
      if (rest == 0) break;
    }

    // Fold the block into the rows that remain (subsets of `above`).
    for (SubsetMask v = above; v != 0; v = (v - 1) & above) {
      Row& row = rows[v];
      const SubsetMask row_free = full & ~v;
      const SubsetMask w_free = above & ~v;
      SubsetMask extra = 0;
      do {
        const SubsetMask w_set = v | extra;
        Rational& slot = row.super[compress(w_set | bit_e, row_free)];
        if (!slot.is_zero()) {
          const Rational g = std::exchange(slot, Rational());
          const Solved& blk = solved[w_set | bit_e];
          row.rhs.add_mul(g, blk.constant);
          const SubsetMask blk_free = above & ~w_set;
          std::uint32_t idx = 0;
          SubsetMask sub = 0;
          do {
            const Rational& w = blk.weight[idx++];
            if (!w.is_zero()) {
              const SubsetMask u = w_set | sub;
              if (u == v) {
                row.diag.sub_mul(g, w);
              } else {
                row.super[compress(u & ~v, row_free)].add_mul(g, w);
              }
            }
            sub = next_subset(sub, blk_free);
          } while (sub != 0);
        }
        extra = next_subset(extra, w_free);
      } while (extra != 0);
    }
  }

  std::vector<Rational> h(n);
  for (unsigned e = k; e-- > 0;) {
    const SubsetMask bit_e = SubsetMask{1} << e;
    const SubsetMask above = full & ~((bit_e << 1) - 1);
    SubsetMask rest = 0;
    do {
      const Solved& blk = solved[rest | bit_e];
      Rational value = blk.constant;
      const SubsetMask free = above & ~rest;
      std::uint32_t idx = 0;
      SubsetMask sub = 0;
      do {
        const Rational& w = blk.weight[idx++];
        if (!w.is_zero()) value.add_mul(w, h[rest | sub]);
        sub = next_subset(sub, free);
      } while (sub != 0);
      h[rest | bit_e] = std::move(value);
      rest = next_subset(rest, above);
    } while (rest != 0);
  }
  return h;
}

// Row residual |a h(S) - p_m h(S - m) - sum p_j h(S + j) - 1|. Since the
// fundamental matrix maps the all-ones vector to h itself, the max of these
// bounds max|h - h*| / max h*.
long double row_residual(unsigned k, const std::vector<long double>& p, const std::vector<long double>& h,
                         SubsetMask s) {
  const unsigned m = lowest(s);
  long double diag = p[m];
  long double lhs = -p[m] * h[s & ~(SubsetMask{1} << m)];
  for (unsigned j = 0; j < k; ++j) {
    if (s >> j & 1U) continue;
    diag += p[j];
    lhs -= p[j] * h[s | SubsetMask{1} << j];
  }
  lhs += diag * h[s];
  return std::fabs(lhs - 1.0L);
}

}  // namespace

std::string to_string(SolveMode mode) { return mode == SolveMode::exact ? "exact" : "iterative"; }

SubsetSystem build_system(const MemorylessPolicy& policy) {
  SubsetSystem sys;
  sys.k = policy.k();
  sys.probs = policy.canonical_probs();
  validate_k(sys.k, kMaxIterativeK, "build_system");
  const SubsetMask full = (SubsetMask{1} << sys.k) - 1;
  sys.equations.resize(std::size_t{full} + 1);
  sys.equations[0].terms.emplace_back(0, Rational(1));
  for (SubsetMask s = 1; s <= full; ++s) {
    auto& eq = sys.equations[s];
    eq.subset = s;
    eq.rhs = Rational(1);
    const unsigned m = lowest(s);
    Rational diag = sys.probs[m];
    const SubsetMask down = s & ~(SubsetMask{1} << m);
    eq.terms.emplace_back(down, -sys.probs[m]);
    for (unsigned j = 0; j < sys.k; ++j) {
      if (s >> j & 1U) continue;
      diag += sys.probs[j];
      eq.terms.emplace_back(s | SubsetMask{1} << j, -sys.probs[j]);
    }
    eq.terms.emplace(eq.terms.begin(), s, std::move(diag));
  }
  return sys;
}

Rational max_abs_residual(const SubsetSystem& system, const std::vector<Rational>& h) {
  Rational worst;
  for (const auto& eq : system.equations) {
    Rational r = -eq.rhs;
    for (const auto& [mask, coef] : eq.terms) r.add_mul(coef, h.at(mask));
    r = r.abs();
    if (r > worst) worst = r;
  }
  return worst;
}

SubsetSolution SubsetSolution::from_exact(const MemorylessPolicy& policy, std::vector<Rational> h) {
  if (h.size() != (std::size_t{1} << policy.k())) throw std::invalid_argument("solution: expected 2^k values");
  SubsetSolution sol;
  sol.k_ = policy.k();
  sol.probs_ = policy.canonical_probs();
  sol.order_ = policy.order();
  sol.mode_ = SolveMode::exact;
  sol.approx_.reserve(h.size());
  for (const auto& v : h) sol.approx_.push_back(v.to_long_double());
  sol.exact_ = std::move(h);
  sol.residual_ = max_abs_residual(build_system(policy), sol.exact_).to_double();
  return sol;
}

SubsetSolution SubsetSolution::from_approx(const MemorylessPolicy& policy, std::vector<long double> h,
                                           double tolerance) {
  if (h.size() != (std::size_t{1} << policy.k())) throw std::invalid_argument("solution: expected 2^k values");
  SubsetSolution sol;
  sol.k_ = policy.k();
  sol.probs_ = policy.canonical_probs();
  sol.order_ = policy.order();
  sol.mode_ = SolveMode::iterative;
  sol.tolerance_ = tolerance;
  sol.approx_ = std::move(h);
  std::vector<long double> p;
  for (const auto& v : sol.probs_) p.push_back(v.to_long_double());
  long double worst = 0;
  for (SubsetMask s = 1; s < sol.approx_.size(); ++s) worst = std::max(worst, row_residual(sol.k_, p, sol.approx_, s));
  sol.residual_ = static_cast<double>(worst);
  return sol;
}

const Rational& SubsetSolution::h(SubsetMask s) const {
  if (!exact()) throw std::logic_error("exact value requested from an iterative solution");
  return exact_.at(s);
}

const std::vector<Rational>& SubsetSolution::exact_values() const {
  if (!exact()) throw std::logic_error("exact values requested from an iterative solution");
  return exact_;
}

long double SubsetSolution::approx(SubsetMask s) const { return approx_.at(s); }

SubsetSolution solve_system(const MemorylessPolicy& policy, const SolveOptions& options) {
  const unsigned k = policy.k();
  const auto& p = policy.canonical_probs();
  if (options.mode == SolveMode::exact) {
    validate_k(k, kMaxExactK, "exact");
    auto h = solve_exact(k, p);
    const Rational residual = max_abs_residual(build_system(policy), h);
    if (!residual.is_zero()) {
      throw SolverError("exact solve: nonzero residual " + residual.to_display(), residual.to_double(), 0);
    }
    return SubsetSolution::from_exact(policy, std::move(h));
  }

  validate_k(k, kMaxIterativeK, "iterative");
  if (!(options.tolerance > 0.0)) throw std::invalid_argument("iterative solve: tolerance must be positive");
  const SubsetMask full = (SubsetMask{1} << k) - 1;
  std::vector<long double> pf;
  for (const auto& v : p) pf.push_back(v.to_long_double());

  std::vector<SubsetMask> sweep(full);
  std::iota(sweep.begin(), sweep.end(), SubsetMask{1});
  std::stable_sort(sweep.begin(), sweep.end(), [](SubsetMask a, SubsetMask b) { return size_of(a) < size_of(b); });

  // Plain sweeps contract like 1 - 1/h({k}), so once the ratio of
  // successive update norms settles the geometric tail is added in one step
  // (Aitken extrapolation along the dominant mode).
  std::vector<long double> h(std::size_t{full} + 1, 0.0L);
  std::vector<long double> prev(h.size(), 0.0L);
  std::size_t it = 0;
  long double worst = 0;
  long double last_delta = 0, last_ratio = 0;
  long double best = std::numeric_limits<long double>::infinity();
  std::size_t best_at = 0;
  while (it < options.max_sweeps) {
    ++it;
    prev = h;
    for (SubsetMask s : sweep) {
      const unsigned m = lowest(s);
      long double diag = pf[m];
      long double acc = 1.0L + pf[m] * h[s & ~(SubsetMask{1} << m)];
      for (unsigned j = 0; j < k; ++j) {
        if (s >> j & 1U) continue;
        diag += pf[j];
        acc += pf[j] * h[s | SubsetMask{1} << j];
      }
      h[s] = acc / diag;
    }
    long double delta = 0;
    for (SubsetMask s : sweep) {
      delta = std::max(delta, std::fabs(h[s] - prev[s]));
    }
    const long double ratio = last_delta > 0 ? delta / last_delta : 0;
    worst = 0;
    for (SubsetMask s : sweep) worst = std::max(worst, row_residual(k, pf, h, s));
    long double hmax = 1;
    for (SubsetMask s : sweep) hmax = std::max(hmax, h[s]);
    const long double floor = 4.0L * (k + 1) * std::numeric_limits<long double>::epsilon() * hmax;
    if (worst < options.tolerance) {
      auto sol = SubsetSolution::from_approx(policy, std::move(h), options.tolerance);
      sol.iterations_ = it;
      return sol;
    }
    if (options.tolerance < floor && worst < 10 * floor) {
      std::ostringstream msg;
      msg << "iterative solve: tolerance " << options.tolerance << " is below the attainable floating-point floor "
          << static_cast<double>(floor) << " (max residual " << static_cast<double>(worst) << " after " << it
          << " sweeps)";
      throw SolverError(msg.str(), static_cast<double>(worst), it);
    }
    if (worst < 0.5L * best) {
      best = worst;
      best_at = it;
    } else if (it - best_at > 50000) {
      std::ostringstream msg;
      msg << "iterative solve: stalled at max residual " << static_cast<double>(worst) << " after " << it
          << " sweeps (tolerance " << options.tolerance << ", rounding limit)";
      throw SolverError(msg.str(), static_cast<double>(worst), it);
    }
    if (ratio > 0.5L && ratio < 1 && std::fabs(ratio - last_ratio) < 1e-2L * (1 - ratio)) {
      const long double gain = ratio / (1 - ratio);
      for (SubsetMask s : sweep) h[s] += (h[s] - prev[s]) * gain;
      last_delta = 0;
      last_ratio = 0;
      continue;
    }
    last_delta = delta;
    last_ratio = ratio;
  }
  std::ostringstream msg;
  msg << "iterative solve: no convergence after " << it << " sweeps, max residual "
      << static_cast<double>(worst) << " (tolerance " << options.tolerance << ")";
  throw SolverError(msg.str(), static_cast<double>(worst), it);
}

Rational lower_bound_hk(const MemorylessPolicy& policy) {
  return Rational(alpha(policy.k())) / policy.smallest();
}

namespace {

// Uniform access to exact and floating solutions for the checks below.
template <class T>
struct Values;

template <>
struct Values<Rational> {
  const SubsetSolution& sol;
  Rational h(SubsetMask s) const { return sol.h(s); }
  Rational p(unsigned i) const { return sol.canonical_probs()[i]; }
  static Rational from(const BigNat& a) { return Rational(a); }
  bool exceeds(const Rational& lhs, const Rational& rhs) const { return lhs > rhs; }
  static std::string str(const Rational& v) { return v.to_display(); }
};

template <>
struct Values<long double> {
  const SubsetSolution& sol;
  long double h(SubsetMask s) const { return sol.approx(s); }
  long double p(unsigned i) const { return sol.canonical_probs()[i].to_long_double(); }
  static long double from(const BigNat& a) { return Rational(a).to_long_double(); }
  bool exceeds(long double lhs, long double rhs) const {
    const long double slack = 10.0L * sol.tolerance() * std::max({1.0L, std::fabs(lhs), std::fabs(rhs)});
    return lhs - rhs > slack;
  }
  static std::string str(long double v) {
    std::ostringstream os;
    os.precision(17);
    os << static_cast<double>(v);
    return os.str();
  }
};

template <class T>
std::vector<SubsetViolation> monotonicity_impl(const SubsetSolution& sol) {
  const Values<T> v{sol};
  std::vector<SubsetViolation> out;
  const unsigned k = sol.k();
  for (SubsetMask s = 1; s <= sol.full(); ++s) {
    std::vector<T> drop(k);
    for (unsigned i = 0; i < k; ++i) {
      if (s >> i & 1U) drop[i] = v.p(i) * (v.h(s) - v.h(s & ~(SubsetMask{1} << i)));
    }
    for (unsigned i = 0; i < k; ++i) {
      if (!(s >> i & 1U)) continue;
      for (unsigned j = i + 1; j < k; ++j) {
        if (!(s >> j & 1U)) continue;
        if (v.exceeds(drop[i], drop[j])) out.push_back({s, i, j, Values<T>::str(drop[i]), Values<T>::str(drop[j])});
      }
    }
  }
  return out;
}

template <class T>
std::vector<SubsetViolation> alpha_bound_impl(const SubsetSolution& sol) {
  const Values<T> v{sol};
  std::vector<SubsetViolation> out;
  const unsigned k = sol.k();
  const auto a = alpha_table(k);
  for (SubsetMask s = 1; s <= sol.full(); ++s) {
    const T bound = Values<T>::from(a[k - size_of(s) + 1]);
    for (unsigned i = 0; i < k; ++i) {
      if (!(s >> i & 1U)) continue;
      const T lhs = v.p(i) * (v.h(s) - v.h(s & ~(SubsetMask{1} << i)));
      if (v.exceeds(bound, lhs)) out.push_back({s, i, i, Values<T>::str(lhs), Values<T>::str(bound)});
    }
  }
  return out;
}

template <class T>
std::optional<std::string> phi_check_impl(const SubsetSolution& sol, const std::vector<T>& phi) {
  const Values<T> v{sol};
  const unsigned k = sol.k();
  const SubsetMask full = sol.full();
  if (phi[0] != T{}) return std::string("phi({}) != 0");
  for (SubsetMask t = 0; t < full; ++t) {
    const unsigned m = lowest(full & ~t);
    const T lhs = v.p(m) * (phi[t | SubsetMask{1} << m] - phi[t]);
    T rhs = T(1);
    for (unsigned j = 0; j < k; ++j) {
      if (t >> j & 1U) rhs += v.p(j) * (phi[t] - phi[t & ~(SubsetMask{1} << j)]);
    }
    if (v.exceeds(lhs, rhs) || v.exceeds(rhs, lhs)) {
      return "transformed row T=" + std::to_string(t) + " (m=" + std::to_string(m) + "): " + Values<T>::str(lhs) +
             " != " + Values<T>::str(rhs);
    }
  }
  return std::nullopt;
}

}  // namespace

std::vector<SubsetViolation> check_monotonicity(const SubsetSolution& sol) {
  return sol.exact() ? monotonicity_impl<Rational>(sol) : monotonicity_impl<long double>(sol);
}

std::vector<SubsetViolation> check_subset_alpha_bound(const SubsetSolution& sol) {
  return sol.exact() ? alpha_bound_impl<Rational>(sol) : alpha_bound_impl<long double>(sol);
}

PhiResult phi_transform(const SubsetSolution& sol) {
  PhiResult out;
  const SubsetMask full = sol.full();
  out.phi_approx.resize(std::size_t{full} + 1);
  for (SubsetMask s = 0; s <= full; ++s) out.phi_approx[s] = sol.approx(full) - sol.approx(full & ~s);
  if (sol.exact()) {
    out.phi.resize(std::size_t{full} + 1);
    for (SubsetMask s = 0; s <= full; ++s) out.phi[s] = sol.h(full) - sol.h(full & ~s);
    out.violation = phi_check_impl<Rational>(sol, out.phi);
  } else {
    out.violation = phi_check_impl<long double>(sol, out.phi_approx);
  }
  return out;
}

Rational competitive_gap(const SubsetSolution& sol) {
  const unsigned k = sol.k();
  return sol.h(SubsetMask{1} << (k - 1)) - Rational(BigNat(static_cast<unsigned long>(k)) * alpha(k));
}

Rational competitive_gap(const MemorylessPolicy& policy) { return competitive_gap(solve_system(policy)); }

void write_solution_csv(std::ostream& os, const SubsetSolution& sol) {
  os << "subset_mask,subset_size,h_num,h_den\n";
  for (SubsetMask s = 0; s <= sol.full(); ++s) {
    const Rational& v = sol.h(s);
    os << s << ',' << size_of(s) << ',' << v.num().get_str() << ',' << v.den().get_str() << '\n';
  }
}

nlohmann::json solution_summary(const MemorylessPolicy& policy, const SubsetSolution& sol) {
  nlohmann::json j;
  j["policy"] = policy.to_string();
  j["k"] = sol.k();
  j["mode"] = to_string(sol.mode());
  const Rational bound = lower_bound_hk(policy);
  j["lower_bound"] = bound.to_string();
  if (sol.exact()) {
    const Rational hk = sol.h(SubsetMask{1} << (sol.k() - 1));
    j["h_k"] = hk.to_string();
    j["gap"] = competitive_gap(sol).to_string();
  } else {
    const long double hk = sol.h_last_approx();
    j["h_k"] = static_cast<double>(hk);
    j["gap"] = static_cast<double>(hk - Rational(BigNat(static_cast<unsigned long>(sol.k())) * alpha(sol.k())).to_long_double());
    j["tolerance"] = sol.tolerance();
  }
  j["residual"] = sol.residual();
  j["iterations"] = sol.iterations();
  return j;
}

}  // namespace gks
