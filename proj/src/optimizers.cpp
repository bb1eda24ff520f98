#include "pvqe/optimizers.hpp"

#include "pvqe/csv.hpp"
#include "pvqe/error.hpp"
#include "pvqe/rng.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace pvqe {

namespace {

using Index = Eigen::Index;

struct NanAbort {};

struct Eval {
  double value;
  std::size_t index;
};

class Tracker {
public:
  Tracker(const Objective &f, const OptimizerConfig &cfg) : f_(f), cfg_(cfg) {}

  Eval operator()(const RVector &theta) {
    const double v = f_(theta);
    const std::size_t idx = count_++;
    if (!std::isfinite(v)) throw NanAbort{};
    return {v, idx};
  }

  /// Records an iteration; returns true when the run should stop.
  bool record(const RVector &theta, Eval e) {
    IterationRecord r;
    r.iteration = trace_.records.size();
    r.theta = theta;
    r.value = e.value;
    r.evaluations = count_;
    r.eval_index = e.index;
    if (trace_.records.empty() || e.value < trace_.best_value) {
      trace_.best_value = e.value;
      trace_.best_theta = theta;
      trace_.best_eval_index = e.index;
    }
    trace_.records.push_back(std::move(r));
    best_history_.push_back(trace_.best_value);
    const std::size_t it = trace_.records.size() - 1;
    if (cfg_.window > 0 && it >= cfg_.window &&
        best_history_[it - cfg_.window] - trace_.best_value < cfg_.tolerance) {
      trace_.status = OptStatus::Converged;
      return true;
    }
    return it >= cfg_.max_iterations;
  }

  void converged() { trace_.status = OptStatus::Converged; }
  std::size_t iterations() const { return trace_.records.empty() ? 0 : trace_.records.size() - 1; }

  OptTrace finish(bool aborted) {
    trace_.evaluations = count_;
    if (aborted) trace_.status = OptStatus::NanAbort;
    return std::move(trace_);
  }

private:
  const Objective &f_;
  const OptimizerConfig &cfg_;
  std::size_t count_ = 0;
  OptTrace trace_;
  std::vector<double> best_history_;
};

RVector central_gradient(Tracker &t, const RVector &theta, double h) {
  RVector g(theta.size());
  for (Index j = 0; j < theta.size(); ++j) {
    RVector p = theta, m = theta;
    p(j) += h;
    m(j) -= h;
    g(j) = (t(p).value - t(m).value) / (2.0 * h);
  }
  return g;
}

using Preconditioner = std::function<RVector(const RVector &theta, const RVector &grad, std::size_t k)>;

void gradient_loop(Tracker &t, const RVector &theta0, const OptimizerConfig &cfg,
                   const Preconditioner &pre) {
  RVector theta = theta0;
  if (t.record(theta, t(theta))) return;
  for (std::size_t k = 0;; ++k) {
    RVector g = central_gradient(t, theta, cfg.fd_step);
    if (pre) g = pre(theta, g, k);
    theta -= cfg.step_size * g;
    if (t.record(theta, t(theta))) return;
  }
}

void nelder_mead(Tracker &t, const RVector &theta0, const OptimizerConfig &cfg) {
  const Index n = theta0.size();
  std::vector<RVector> x;
  std::vector<Eval> fx;
  x.push_back(theta0);
  fx.push_back(t(theta0));
  if (t.record(theta0, fx[0])) return;
  for (Index j = 0; j < n; ++j) {
    RVector v = theta0;
    v(j) += cfg.simplex_step;
    x.push_back(v);
    fx.push_back(t(v));
  }
  std::vector<std::size_t> order(x.size());
  while (true) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return fx[a].value < fx[b].value; });
    const std::size_t best = order.front(), worst = order.back(), second = order[order.size() - 2];
    RVector centroid = RVector::Zero(n);
    for (std::size_t i = 0; i + 1 < order.size(); ++i) centroid += x[order[i]];
    centroid /= static_cast<double>(n);

    const RVector xr = centroid + (centroid - x[worst]);
    const Eval fr = t(xr);
    if (fr.value < fx[best].value) {
      const RVector xe = centroid + 2.0 * (centroid - x[worst]);
      const Eval fe = t(xe);
      if (fe.value < fr.value) {
        x[worst] = xe;
        fx[worst] = fe;
      } else {
        x[worst] = xr;
        fx[worst] = fr;
      }
    } else if (fr.value < fx[second].value) {
      x[worst] = xr;
      fx[worst] = fr;
    } else {
      const bool outside = fr.value < fx[worst].value;
      const RVector xc = outside ? RVector(centroid + 0.5 * (xr - centroid))
                                 : RVector(centroid + 0.5 * (x[worst] - centroid));
      const Eval fc = t(xc);
      if (fc.value < (outside ? fr.value : fx[worst].value)) {
        x[worst] = xc;
        fx[worst] = fc;
      } else {
        for (std::size_t i = 0; i < x.size(); ++i) {
          if (i == best) continue;
          x[i] = x[best] + 0.5 * (x[i] - x[best]);
          fx[i] = t(x[i]);
        }
      }
    }
    std::size_t b = 0;
    for (std::size_t i = 1; i < x.size(); ++i)
      if (fx[i].value < fx[b].value) b = i;
    if (t.record(x[b], fx[b])) return;
  }
}

void spsa(Tracker &t, const RVector &theta0, const OptimizerConfig &cfg) {
  std::mt19937_64 rng(cfg.seed);
  std::bernoulli_distribution coin(0.5);
  RVector theta = theta0;
  if (t.record(theta, t(theta))) return;
  for (std::size_t k = 0;; ++k) {
    const double kk = static_cast<double>(k);
    const double ak = cfg.spsa_a / std::pow(kk + 1.0 + cfg.spsa_A, cfg.spsa_alpha);
    const double ck = cfg.spsa_c / std::pow(kk + 1.0, cfg.spsa_gamma);
    RVector delta(theta.size());
    for (Index j = 0; j < delta.size(); ++j) delta(j) = coin(rng) ? 1.0 : -1.0;
    const double yp = t(theta + ck * delta).value;
    const double ym = t(theta - ck * delta).value;
    theta -= ak * ((yp - ym) / (2.0 * ck)) * delta;
    if (t.record(theta, t(theta))) return;
  }
}

void pso(Tracker &t, const RVector &theta0, const OptimizerConfig &cfg) {
  const Index n = theta0.size();
  RVector lo(n), hi(n);
  for (Index j = 0; j < n; ++j) {
    lo(j) = cfg.lower.empty() ? theta0(j) - std::numbers::pi : cfg.lower[static_cast<std::size_t>(j)];
    hi(j) = cfg.upper.empty() ? theta0(j) + std::numbers::pi : cfg.upper[static_cast<std::size_t>(j)];
  }
  const RVector width = hi - lo;
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const std::size_t m = cfg.swarm_size;
  std::vector<RVector> x(m), v(m), pbest(m);
  std::vector<Eval> fbest(m);
  std::size_t g = 0;
  for (std::size_t i = 0; i < m; ++i) {
    x[i] = RVector(n);
    v[i] = RVector(n);
    for (Index j = 0; j < n; ++j) {
      x[i](j) = i == 0 ? std::clamp(theta0(j), lo(j), hi(j)) : lo(j) + width(j) * u01(rng);
      v[i](j) = 0.1 * width(j) * (2.0 * u01(rng) - 1.0);
    }
    pbest[i] = x[i];
    fbest[i] = t(x[i]);
    if (fbest[i].value < fbest[g].value) g = i;
  }
  if (t.record(pbest[g], fbest[g])) return;
  while (true) {
    for (std::size_t i = 0; i < m; ++i) {
      for (Index j = 0; j < n; ++j) {
        const double r1 = u01(rng), r2 = u01(rng);
        double vj = cfg.inertia * v[i](j) + cfg.cognitive * r1 * (pbest[i](j) - x[i](j)) +
                    cfg.social * r2 * (pbest[g](j) - x[i](j));
        vj = std::clamp(vj, -width(j), width(j));
        v[i](j) = vj;
        x[i](j) = std::clamp(x[i](j) + vj, lo(j), hi(j));
      }
    }
    // Evaluate after the synchronous move so every particle sees the same
    // global best.
    for (std::size_t i = 0; i < m; ++i) {
      const Eval e = t(x[i]);
      if (e.value < fbest[i].value) {
        fbest[i] = e;
        pbest[i] = x[i];
      }
    }
    for (std::size_t i = 0; i < m; ++i)
      if (fbest[i].value < fbest[g].value) g = i;
    if (t.record(pbest[g], fbest[g])) return;
  }
}

void trust_region(Tracker &t, const RVector &theta0, const OptimizerConfig &cfg) {
  const Index n = theta0.size();
  double rho = cfg.rho_begin;
  RVector x0 = theta0;
  Eval f0 = t(x0);
  if (t.record(x0, f0)) return;
  std::vector<RVector> pts;
  std::vector<Eval> fs;
  auto rebuild = [&] {
    pts.clear();
    fs.clear();
    for (Index j = 0; j < n; ++j) {
      RVector p = x0;
      p(j) += rho;
      pts.push_back(p);
      fs.push_back(t(p));
    }
  };
  rebuild();
  while (true) {
    if (rho < cfg.rho_end) {
      t.converged();
      return;
    }
    RMatrix d(n, n);
    RVector df(n);
    for (Index i = 0; i < n; ++i) {
      d.row(i) = (pts[static_cast<std::size_t>(i)] - x0).transpose();
      df(i) = fs[static_cast<std::size_t>(i)].value - f0.value;
    }
    const double det = std::abs(d.determinant());
    if (det < 1e-3 * std::pow(rho, static_cast<double>(n))) {
      rebuild();
    } else {
      const RVector g = d.partialPivLu().solve(df);
      const double gn = g.norm();
      if (!(gn > 1e-14)) {
        rho *= 0.5;
        rebuild();
      } else {
        const RVector xt = x0 - rho * g / gn;
        const Eval ft = t(xt);
        const double ratio = (f0.value - ft.value) / (rho * gn);
        if (ft.value < f0.value) {
          pts.push_back(x0);
          fs.push_back(f0);
          std::size_t far = 0;
          for (std::size_t i = 1; i < pts.size(); ++i)
            if ((pts[i] - xt).norm() > (pts[far] - xt).norm()) far = i;
          pts.erase(pts.begin() + static_cast<std::ptrdiff_t>(far));
          fs.erase(fs.begin() + static_cast<std::ptrdiff_t>(far));
          x0 = xt;
          f0 = ft;
          if (ratio > 0.75) rho = std::min(2.0 * rho, cfg.rho_max);
          else if (ratio < 0.1) rho *= 0.5;
        } else {
          std::size_t far = 0;
          for (std::size_t i = 1; i < pts.size(); ++i)
            if ((pts[i] - x0).norm() > (pts[far] - x0).norm()) far = i;
          if ((pts[far] - x0).norm() > 2.0 * rho) {
            pts[far] = xt;
            fs[far] = ft;
          } else {
            rho *= 0.5;
            rebuild();
          }
        }
      }
    }
    if (t.record(x0, f0)) return;
  }
}

// Symmetric matrix power via eigendecomposition; eigenvalues below `floor`
// make the matrix singular.
RMatrix sym_power(const RMatrix &m, double alpha) {
  Eigen::SelfAdjointEigenSolver<RMatrix> es(0.5 * (m + m.transpose()));
  const RVector &mu = es.eigenvalues();
  const double scale = std::max(1.0, mu.cwiseAbs().maxCoeff());
  for (Index i = 0; i < mu.size(); ++i)
    if (!(mu(i) > 1e-12 * scale))
      throw ValidationError("regularized QFIM is singular; set qng_lambda > 0");
  RVector p(mu.size());
  for (Index i = 0; i < mu.size(); ++i) p(i) = std::pow(mu(i), -alpha);
  return es.eigenvectors() * p.asDiagonal() * es.eigenvectors().transpose();
}

const CVector &checked(const StateVector &s) { return s.amplitudes(); }

} // namespace

std::string to_string(Method m) {
  switch (m) {
  case Method::GradientDescent: return "gd";
  case Method::NelderMead: return "nelder_mead";
  case Method::Spsa: return "spsa";
  case Method::Pso: return "pso";
  case Method::Cobyla: return "cobyla";
  case Method::Qng: return "qng";
  }
  return "?";
}

Method method_from_string(const std::string &s) {
  if (s == "gd" || s == "gradient_descent") return Method::GradientDescent;
  if (s == "nelder_mead" || s == "nm") return Method::NelderMead;
  if (s == "spsa") return Method::Spsa;
  if (s == "pso") return Method::Pso;
  if (s == "cobyla") return Method::Cobyla;
  if (s == "qng") return Method::Qng;
  throw ValidationError("unknown optimizer '" + s + "' (gd, nelder_mead, spsa, pso, cobyla, qng)");
}

std::string to_string(OptStatus s) {
  switch (s) {
  case OptStatus::Converged: return "converged";
  case OptStatus::MaxIterations: return "max_iterations";
  case OptStatus::NanAbort: return "nan_abort";
  }
  return "?";
}

void OptimizerConfig::validate() const {
  if (!(step_size > 0.0)) throw ValidationError("step_size must be > 0");
  if (max_iterations < 1) throw ValidationError("max_iterations must be >= 1");
  if (!(tolerance >= 0.0)) throw ValidationError("tolerance must be >= 0");
  if (!(fd_step > 0.0)) throw ValidationError("fd_step must be > 0");
  if (!(simplex_step > 0.0)) throw ValidationError("simplex_step must be > 0");
  if (!(spsa_a > 0.0 && spsa_c > 0.0 && spsa_A >= 0.0)) throw ValidationError("SPSA gains must be positive");
  if (swarm_size < 2) throw ValidationError("swarm_size must be >= 2");
  if (lower.size() != upper.size()) throw ValidationError("PSO bounds must have equal length");
  for (std::size_t i = 0; i < lower.size(); ++i)
    if (!(lower[i] < upper[i])) throw ValidationError("PSO lower bound must be below upper bound");
  if (!(rho_begin > 0.0 && rho_end > 0.0 && rho_end < rho_begin))
    throw ValidationError("trust-region radii must be positive and decreasing");
  if (!(rho_max >= rho_begin)) throw ValidationError("rho_max must be >= rho_begin");
  if (!(qng_lambda >= 0.0)) throw ValidationError("qng_lambda must be >= 0");
  if (!(qfim_step > 0.0)) throw ValidationError("qfim_step must be > 0");
}

OptTrace minimize(const Objective &f, const RVector &theta0, const OptimizerConfig &cfg) {
  cfg.validate();
  if (theta0.size() == 0) throw ValidationError("empty parameter vector");
  if (cfg.method == Method::Qng) throw ValidationError("qng needs a state function; use minimize_qng");
  if (!cfg.lower.empty() && cfg.lower.size() != static_cast<std::size_t>(theta0.size()))
    throw ValidationError("PSO bounds do not match the parameter count");
  Tracker t(f, cfg);
  try {
    switch (cfg.method) {
    case Method::GradientDescent: gradient_loop(t, theta0, cfg, {}); break;
    case Method::NelderMead: nelder_mead(t, theta0, cfg); break;
    case Method::Spsa: spsa(t, theta0, cfg); break;
    case Method::Pso: pso(t, theta0, cfg); break;
    case Method::Cobyla: trust_region(t, theta0, cfg); break;
    case Method::Qng: break;
    }
  } catch (const NanAbort &) {
    return t.finish(true);
  }
  return t.finish(false);
}

RMatrix qfim(const StateFn &state, const RVector &theta, double h) {
  if (!(h > 0.0)) throw ValidationError("qfim step must be > 0");
  const CVector psi = checked(state(theta));
  const Index n = theta.size();
  std::vector<CVector> d(static_cast<std::size_t>(n));
  auto aligned = [&](const RVector &t) {
    CVector v = checked(state(t));
    const Complex ov = psi.dot(v); // <psi|v>
    if (std::abs(ov) > 0.0) v *= std::conj(ov) / std::abs(ov);
    return v;
  };
  for (Index j = 0; j < n; ++j) {
    RVector p = theta, m = theta;
    p(j) += h;
    m(j) -= h;
    d[static_cast<std::size_t>(j)] = (aligned(p) - aligned(m)) / (2.0 * h);
  }
  RMatrix f(n, n);
  for (Index j = 0; j < n; ++j)
    for (Index k = j; k < n; ++k) {
      const CVector &dj = d[static_cast<std::size_t>(j)], &dk = d[static_cast<std::size_t>(k)];
      const Complex v = dj.dot(dk) - dj.dot(psi) * psi.dot(dk);
      f(j, k) = f(k, j) = 4.0 * v.real();
    }
  return f;
}

OptTrace minimize_qng(const Objective &f, const StateFn &state, const RVector &theta0,
                      const OptimizerConfig &cfg) {
  cfg.validate();
  if (theta0.size() == 0) throw ValidationError("empty parameter vector");
  Tracker t(f, cfg);
  Preconditioner pre;
  const Index n = theta0.size();
  RMatrix running = RMatrix::Zero(n, n);
  std::mt19937_64 rng(derive_seed(cfg.seed, 1));
  std::bernoulli_distribution coin(0.5);
  if (cfg.qng_alpha != 0.0) {
    pre = [&](const RVector &theta, const RVector &g, std::size_t k) -> RVector {
      RMatrix fm;
      if (cfg.qng_spsa) {
        const CVector psi = checked(state(theta));
        auto fid = [&](const RVector &x) { return std::norm(psi.dot(checked(state(x)))); };
        RVector d1(n), d2(n);
        for (Index j = 0; j < n; ++j) {
          d1(j) = coin(rng) ? 1.0 : -1.0;
          d2(j) = coin(rng) ? 1.0 : -1.0;
        }
        const double c = cfg.spsa_c;
        const double df = fid(theta + c * (d1 + d2)) - fid(theta + c * d1) -
                          fid(theta + c * (d2 - d1)) + fid(theta - c * d1);
        const RMatrix hess = df / (2.0 * c * c) * 0.5 * (d1 * d2.transpose() + d2 * d1.transpose());
        const RMatrix sample = -2.0 * hess;
        const double kk = static_cast<double>(k);
        running = (kk * running + sample) / (kk + 1.0);
        // PSD projection: |F| through the eigenvalues.
        Eigen::SelfAdjointEigenSolver<RMatrix> es(running);
        fm = es.eigenvectors() * es.eigenvalues().cwiseAbs().asDiagonal() * es.eigenvectors().transpose();
      } else {
        fm = qfim(state, theta, cfg.qfim_step);
      }
      fm += cfg.qng_lambda * RMatrix::Identity(n, n);
      return sym_power(fm, cfg.qng_alpha) * g;
    };
  }
  try {
    gradient_loop(t, theta0, cfg, pre);
  } catch (const NanAbort &) {
    return t.finish(true);
  }
  return t.finish(false);
}

std::string format_trace_csv(const OptTrace &t) {
  CsvTable table;
  table.header = {"iter", "value", "evals"};
  const Index n = t.records.empty() ? 0 : t.records.front().theta.size();
  for (Index j = 0; j < n; ++j) table.header.push_back("theta" + std::to_string(j));
  for (const auto &r : t.records) {
    std::vector<std::string> row{std::to_string(r.iteration), format_number(r.value),
                                 std::to_string(r.evaluations)};
    for (Index j = 0; j < n; ++j) row.push_back(format_number(r.theta(j)));
    table.add_row(std::move(row));
  }
  return table.str();
}

} // namespace pvqe
