#include "idm/kernel_sums.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "idm/error.hpp"

namespace idm {

std::size_t TransitionData::events() const noexcept {
  return static_cast<std::size_t>(std::count(event.begin(), event.end(), 1));
}

TransitionData make_transition_data(const Dataset& data, Transition t,
                                    std::span<const std::size_t> covariates,
                                    std::span<const double> weights) {
  if (!weights.empty() && weights.size() != data.size())
    throw Error(ErrorKind::DimensionMismatch, "weight vector length differs from n");
  for (std::size_t c : covariates)
    if (c >= data.dim())
      throw Error(ErrorKind::DimensionMismatch, "covariate index out of range");

  TransitionData td;
  td.transition = t;
  td.n_total = data.size();
  td.p = covariates.size();
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Observation& o = data[i];
    int flag = 0;
    switch (t) {
      case Transition::T01: flag = o.delta1; break;
      case Transition::T02: flag = o.delta2; break;
      case Transition::T12:
        if (!o.delta1) continue;
        flag = o.delta3;
        break;
    }
    td.rows.push_back(i);
    if (t == Transition::T12) {
      td.log_exit.push_back(std::log(o.w));
      td.log_entry.push_back(std::log(o.v));
    } else {
      td.log_exit.push_back(std::log(o.v));
    }
    for (std::size_t c : covariates) td.x.push_back(o.x[c]);
    td.event.push_back(static_cast<char>(flag));
    td.weight.push_back(weights.empty() ? 1.0 : weights[i]);
  }
  return td;
}

std::vector<double> exit_residuals(const TransitionData& td, std::span<const double> beta) {
  std::vector<double> r(td.size());
  for (std::size_t j = 0; j < td.size(); ++j) {
    double eta = 0.0;
    for (std::size_t l = 0; l < td.p; ++l) eta += beta[l] * td.x[j * td.p + l];
    r[j] = td.log_exit[j] - eta;
  }
  return r;
}

std::vector<double> entry_residuals(const TransitionData& td, std::span<const double> beta) {
  if (!td.truncated()) return {};
  std::vector<double> r(td.size());
  for (std::size_t j = 0; j < td.size(); ++j) {
    double eta = 0.0;
    for (std::size_t l = 0; l < td.p; ++l) eta += beta[l] * td.x[j * td.p + l];
    r[j] = td.log_entry[j] - eta;
  }
  return r;
}

double cdf_difference(const Kernel& kernel, double hi, double lo) noexcept {
  if (lo > 0.0) return kernel.cdf(-lo) - kernel.cdf(-hi);
  return kernel.cdf(hi) - kernel.cdf(lo);
}

namespace {

void check_inputs(const TransitionData& td, std::span<const double> beta,
                  std::span<const double> e1, KernelBandwidth bw, std::span<double> grad) {
  if (beta.size() != td.p)
    throw Error(ErrorKind::DimensionMismatch, "beta has wrong length");
  if (e1.size() != td.size())
    throw Error(ErrorKind::DimensionMismatch, "e1 has wrong length");
  if (!grad.empty() && grad.size() != td.p)
    throw Error(ErrorKind::DimensionMismatch, "gradient has wrong length");
  if (!(bw.density > 0.0) || !(bw.cumulative > 0.0))
    throw Error(ErrorKind::DomainError, "bandwidths must be positive");
}

constexpr double kTiny = 1e-300;

[[noreturn]] void empty_risk_set(Transition t) {
  throw Error(ErrorKind::EmptyRiskSet, "integrated-kernel sum underflows for transition " +
                                           std::string(to_string(t)));
}

// Members sorted by a residual, with weights and suffix sums of weights.
struct SortedColumn {
  std::vector<std::size_t> member;
  std::vector<double> r;
  std::vector<double> c;
  std::vector<double> suffix;  // suffix[k] = Σ_{q ≥ k} c[q], suffix[m] = 0

  void build(std::span<const double> residual, std::span<const double> weight,
             std::span<const std::size_t> pick) {
    member.assign(pick.begin(), pick.end());
    std::sort(member.begin(), member.end(), [&](std::size_t a, std::size_t b) {
      return residual[a] < residual[b] || (residual[a] == residual[b] && a < b);
    });
    const std::size_t m = member.size();
    r.resize(m);
    c.resize(m);
    suffix.assign(m + 1, 0.0);
    for (std::size_t q = 0; q < m; ++q) {
      r[q] = residual[member[q]];
      c[q] = weight[member[q]];
    }
    for (std::size_t q = m; q-- > 0;) suffix[q] = suffix[q + 1] + c[q];
  }

  std::pair<std::size_t, std::size_t> window(double lo, double hi) const {
    const auto a = std::lower_bound(r.begin(), r.end(), lo) - r.begin();
    const auto b = std::upper_bound(r.begin(), r.end(), hi) - r.begin();
    return {static_cast<std::size_t>(a), static_cast<std::size_t>(std::max(a, b))};
  }
};

}  // namespace

double profile_loglik(const TransitionData& td, std::span<const double> beta,
                      std::span<const double> e1, KernelBandwidth bw, Kernel kernel,
                      std::span<double> grad) {
  check_inputs(td, beta, e1, bw, grad);
  const std::size_t m = td.size(), p = td.p;
  const bool want_grad = !grad.empty();
  if (want_grad) std::fill(grad.begin(), grad.end(), 0.0);

  const std::vector<double> r = exit_residuals(td, beta);
  const std::vector<double> e = entry_residuals(td, beta);
  std::vector<double> c(m);
  std::vector<std::size_t> all(m), events;
  for (std::size_t j = 0; j < m; ++j) {
    c[j] = td.weight[j] * e1[j];
    all[j] = j;
    if (td.event[j]) events.push_back(j);
  }
  if (events.empty()) return 0.0;

  SortedColumn ev, ex, en;
  ev.build(r, td.weight, events);
  ex.build(r, c, all);
  if (td.truncated()) en.build(e, c, all);

  const double n = static_cast<double>(td.n_total);
  const double ad = bw.density, ac = bw.cumulative;
  const double reach_d = kernel.cutoff() * ad, reach_c = kernel.cutoff() * ac;
  const std::size_t ne = events.size();
  std::vector<double> term(ne), gterm(want_grad ? ne * p : 0);
  std::atomic<bool> empty{false};

#pragma omp parallel
  {
    std::vector<double> da(p), db(p);
    std::vector<double> ubuf(m), kbuf(m), fbuf(m);
#pragma omp for schedule(static)
    for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(ne); ++k) {
      const std::size_t i = events[k];
      const double s = r[i];
      const double* xi = &td.x[i * p];
      std::fill(da.begin(), da.end(), 0.0);
      std::fill(db.begin(), db.end(), 0.0);

      double a = 0.0;
      {
        const auto [lo, hi] = ev.window(s - reach_d, s + reach_d);
        const std::size_t w = hi - lo;
        const std::span<double> u(ubuf.data(), w), kv(kbuf.data(), w);
        for (std::size_t q = 0; q < w; ++q) u[q] = (ev.r[lo + q] - s) / ad;
        kernel.density(u, kv);
        for (std::size_t q = 0; q < w; ++q) {
          a += ev.c[lo + q] * kv[q];
          if (want_grad) {
            const double kd = ev.c[lo + q] * kernel.derivative(u[q], kv[q]) / ad;
            const double* xj = &td.x[ev.member[lo + q] * p];
            for (std::size_t l = 0; l < p; ++l) da[l] -= kd * (xj[l] - xi[l]);
          }
        }
      }

      double b = 0.0;
      auto accumulate = [&](const SortedColumn& col, double sign) {
        const auto [lo, hi] = col.window(s - reach_c, s + reach_c);
        const std::size_t w = hi - lo;
        const std::span<double> u(ubuf.data(), w), fv(fbuf.data(), w), kv(kbuf.data(), w);
        for (std::size_t q = 0; q < w; ++q) u[q] = (col.r[lo + q] - s) / ac;
        kernel.cdf(u, fv);
        double part = col.suffix[hi];
        for (std::size_t q = 0; q < w; ++q) part += col.c[lo + q] * fv[q];
        if (want_grad) {
          kernel.density(u, kv);
          for (std::size_t q = 0; q < w; ++q) {
            const double kd = sign * col.c[lo + q] * kv[q] / ac;
            const double* xj = &td.x[col.member[lo + q] * p];
            for (std::size_t l = 0; l < p; ++l) db[l] -= kd * (xj[l] - xi[l]);
          }
        }
        b += sign * part;
      };
      accumulate(ex, 1.0);
      if (td.truncated()) accumulate(en, -1.0);

      a /= n * ad;
      b /= n;
      if (!(b > kTiny) || !(a > kTiny)) {
        empty.store(true, std::memory_order_relaxed);
        continue;
      }
      const double g = td.weight[i];
      term[k] = g * (-td.log_exit[i] + std::log(a) - std::log(b));
      if (want_grad)
        for (std::size_t l = 0; l < p; ++l)
          gterm[k * p + l] = g * (da[l] / (n * ad * a) - db[l] / (n * b));
    }
  }
  if (empty.load()) empty_risk_set(td.transition);

  if (want_grad) {
    std::vector<double> column(ne);
    for (std::size_t l = 0; l < p; ++l) {
      for (std::size_t k = 0; k < ne; ++k) column[k] = gterm[k * p + l];
      grad[l] = compensated_sum(column) / n;
    }
  }
  return compensated_sum(term) / n;
}

double profile_loglik_reference(const TransitionData& td, std::span<const double> beta,
                                std::span<const double> e1, KernelBandwidth bw,
                                Kernel kernel, std::span<double> grad) {
  check_inputs(td, beta, e1, bw, grad);
  const std::size_t m = td.size(), p = td.p;
  const bool want_grad = !grad.empty();
  if (want_grad) std::fill(grad.begin(), grad.end(), 0.0);
  const std::vector<double> r = exit_residuals(td, beta);
  const std::vector<double> e = entry_residuals(td, beta);
  const double n = static_cast<double>(td.n_total);
  const double ad = bw.density, ac = bw.cumulative;

  std::vector<double> terms, da(p), db(p);
  std::vector<std::vector<double>> gterms(p);
  for (std::size_t i = 0; i < m; ++i) {
    if (!td.event[i]) continue;
    const double* xi = &td.x[i * p];
    std::fill(da.begin(), da.end(), 0.0);
    std::fill(db.begin(), db.end(), 0.0);
    double a = 0.0, b = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      const double* xj = &td.x[j * p];
      if (td.event[j]) {
        const double u = (r[j] - r[i]) / ad;
        a += td.weight[j] * kernel.density(u);
        for (std::size_t l = 0; l < p; ++l)
          da[l] -= td.weight[j] * kernel.derivative(u) * (xj[l] - xi[l]) / ad;
      }
      const double cj = td.weight[j] * e1[j];
      const double hi = (r[j] - r[i]) / ac;
      if (td.truncated()) {
        const double lo = (e[j] - r[i]) / ac;
        b += cj * cdf_difference(kernel, hi, lo);
        for (std::size_t l = 0; l < p; ++l)
          db[l] -= cj * (kernel.density(hi) - kernel.density(lo)) * (xj[l] - xi[l]) / ac;
      } else {
        b += cj * kernel.cdf(hi);
        for (std::size_t l = 0; l < p; ++l)
          db[l] -= cj * kernel.density(hi) * (xj[l] - xi[l]) / ac;
      }
    }
    a /= n * ad;
    b /= n;
    if (!(b > kTiny) || !(a > kTiny)) empty_risk_set(td.transition);
    const double g = td.weight[i];
    terms.push_back(g * (-td.log_exit[i] + std::log(a) - std::log(b)));
    for (std::size_t l = 0; l < p; ++l)
      gterms[l].push_back(g * (da[l] / (n * ad * a) - db[l] / (n * b)));
  }
  if (want_grad)
    for (std::size_t l = 0; l < p; ++l) grad[l] = compensated_sum(gterms[l]) / n;
  return compensated_sum(terms) / n;
}

// ---------------------------------------------------------------------------

namespace {

void fill_sorted(std::vector<double>& keys, std::vector<double>& vals,
                 std::vector<double>* suffix, std::span<const double> residual,
                 std::span<const double> weight, std::span<const std::size_t> pick) {
  SortedColumn col;
  col.build(residual, weight, pick);
  keys = std::move(col.r);
  vals = std::move(col.c);
  if (suffix) *suffix = std::move(col.suffix);
}

}  // namespace

HazardSums::HazardSums(const TransitionData& td, std::span<const double> beta,
                       std::span<const double> e1, KernelBandwidth bw, Kernel kernel)
    : n_(static_cast<double>(td.n_total)), bw_(bw), kernel_(kernel) {
  check_inputs(td, beta, e1, bw, {});
  const std::vector<double> r = exit_residuals(td, beta);
  const std::vector<double> e = entry_residuals(td, beta);
  const std::size_t m = td.size();
  std::vector<double> c(m);
  std::vector<std::size_t> all(m), events;
  for (std::size_t j = 0; j < m; ++j) {
    c[j] = td.weight[j] * e1[j];
    all[j] = j;
    if (td.event[j]) events.push_back(j);
  }
  fill_sorted(event_r_, event_w_, nullptr, r, td.weight, events);
  fill_sorted(exit_r_, exit_c_, &exit_suffix_, r, c, all);
  if (td.truncated()) fill_sorted(entry_r_, entry_c_, &entry_suffix_, e, c, all);
}

namespace {

// Scratch for the window evaluations; each thread reuses its own.
std::vector<double>& scratch(std::size_t size) {
  thread_local std::vector<double> buf;
  if (buf.size() < size) buf.resize(size);
  return buf;
}

}  // namespace

double HazardSums::numerator(double s) const {
  const double reach = kernel_.cutoff() * bw_.density;
  const auto lo = std::lower_bound(event_r_.begin(), event_r_.end(), s - reach) - event_r_.begin();
  const auto hi = std::upper_bound(event_r_.begin(), event_r_.end(), s + reach) - event_r_.begin();
  if (hi <= lo) return 0.0;
  const auto w = static_cast<std::size_t>(hi - lo);
  const std::span<double> u(scratch(w).data(), w);
  for (std::size_t q = 0; q < w; ++q) u[q] = (event_r_[lo + q] - s) / bw_.density;
  kernel_.density(u, u);
  double a = 0.0;
  for (std::size_t q = 0; q < w; ++q) a += event_w_[lo + q] * u[q];
  return a / (n_ * bw_.density);
}

double HazardSums::denominator(double s) const {
  const double reach = kernel_.cutoff() * bw_.cumulative;
  auto part = [&](const std::vector<double>& keys, const std::vector<double>& c,
                  const std::vector<double>& suffix) {
    const auto lo = std::lower_bound(keys.begin(), keys.end(), s - reach) - keys.begin();
    const auto hi = std::max(lo, std::upper_bound(keys.begin(), keys.end(), s + reach) - keys.begin());
    const auto w = static_cast<std::size_t>(hi - lo);
    const std::span<double> u(scratch(w).data(), w);
    for (std::size_t q = 0; q < w; ++q) u[q] = (keys[lo + q] - s) / bw_.cumulative;
    kernel_.cdf(u, u);
    double sum = suffix[hi];
    for (std::size_t q = 0; q < w; ++q) sum += c[lo + q] * u[q];
    return sum;
  };
  double b = part(exit_r_, exit_c_, exit_suffix_);
  if (!entry_r_.empty()) b -= part(entry_r_, entry_c_, entry_suffix_);
  return std::max(b, 0.0) / n_;
}

std::size_t HazardSums::at_risk(double s) const noexcept {
  const auto exits = exit_r_.end() - std::lower_bound(exit_r_.begin(), exit_r_.end(), s);
  const auto entries = entry_r_.end() - std::lower_bound(entry_r_.begin(), entry_r_.end(), s);
  return static_cast<std::size_t>(exits - entries);
}

std::vector<double> HazardSums::support() const {
  if (event_r_.empty()) return {};
  const double lo = entry_r_.empty() ? -std::numeric_limits<double>::infinity() : entry_r_.front();
  return {lo, event_r_.back()};
}

HazardSums::Ratio HazardSums::ratio(double s) const {
  // The integrated-kernel bandwidth is the narrower one, so the ratio
  // diverges where nobody (or only a near-zero weight) is at risk. Past the
  // last event or outside the risk set there is nothing to estimate.
  if (event_r_.empty() || s > event_r_.back() || at_risk(s) == 0) return {};
  const double num = numerator(s);
  if (num <= 0.0) return {};
  const double den = denominator(s);
  if (den < degenerate_threshold()) return {0.0, true};
  return {num / den, false};
}

double HazardSums::max_time() const noexcept {
  return exit_r_.empty() ? 0.0 : std::exp(exit_r_.back());
}

HazardTerms hazard_terms_reference(const TransitionData& td, std::span<const double> beta,
                                   std::span<const double> e1, KernelBandwidth bw,
                                   Kernel kernel, double s) {
  check_inputs(td, beta, e1, bw, {});
  const std::vector<double> r = exit_residuals(td, beta);
  const std::vector<double> e = entry_residuals(td, beta);
  const double n = static_cast<double>(td.n_total);
  HazardTerms out;
  for (std::size_t j = 0; j < td.size(); ++j) {
    if (td.event[j]) out.numerator += td.weight[j] * kernel.density((r[j] - s) / bw.density);
    const double hi = (r[j] - s) / bw.cumulative;
    const double f = td.truncated()
                         ? cdf_difference(kernel, hi, (e[j] - s) / bw.cumulative)
                         : kernel.cdf(hi);
    out.denominator += td.weight[j] * e1[j] * f;
  }
  out.numerator /= n * bw.density;
  out.denominator /= n;
  return out;
}

}  // namespace idm
