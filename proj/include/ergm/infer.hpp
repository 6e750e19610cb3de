#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/fisher_f.hpp>

#include "ergm/constraints.hpp"
#include "ergm/diag.hpp"
#include "ergm/error.hpp"
#include "ergm/hull.hpp"
#include "ergm/model.hpp"
#include "ergm/network.hpp"
#include "ergm/propose.hpp"
#include "ergm/rng.hpp"
#include "ergm/sample.hpp"
#include "ergm/tsv.hpp"

namespace ergm {

// ---------------------------------------------------------------------------
// MPLE data

enum class MpleMode { compressed, array, dyadlist };

inline MpleMode parse_mple_mode(const std::string& s) {
  if (s == "compressed") return MpleMode::compressed;
  if (s == "array") return MpleMode::array;
  if (s == "dyadlist") return MpleMode::dyadlist;
  throw UsageError("unknown MPLE output '" + s + "' (expected compressed, array or dyadlist)");
}

struct MpleRows {
  MpleMode mode = MpleMode::compressed;
  std::vector<std::string> names;  // free (non-offset) statistics
  Eigen::VectorXd response;
  Eigen::MatrixXd predictor;
  Eigen::VectorXd weights;
  Eigen::VectorXd offset_shift;  // contribution of the fixed offset coefficients
  std::vector<Dyad> dyads;       // dyadlist and array modes
  // array mode: n x n response and one n x n slice per free statistic, NaN
  // where no dyad exists
  Eigen::MatrixXd array_response;
  std::vector<Eigen::MatrixXd> array;

  Eigen::Index rows() const { return response.size(); }
  double total_weight() const { return weights.sum(); }
};

// Dyads whose state is not fixed by the constraints given the rest of the
// network: allowed level pair, and either present or addable.
template <class F>
void for_each_free_dyad(const Network& net, const Constraints& c, F&& f) {
  for (Vertex i = 0; i < net.size(); ++i)
    for (Vertex j = net.directed() ? 0 : i + 1; j < net.size(); ++j) {
      if (!net.valid_dyad(i, j)) continue;
      const Dyad d{i, j};
      if (c.active() && !c.toggle_allowed(net, d)) continue;
      f(d);
    }
}

namespace detail {

inline double offset_term(const BoundModel& model, const std::vector<double>& full, const double* delta) {
  double s = 0;
  for (int k = 0; k < model.p(); ++k) {
    if (!model.is_offset(k) || delta[k] == 0) continue;
    s += full[static_cast<std::size_t>(k)] * delta[k];
  }
  return std::isnan(s) ? -HUGE_VAL : s;
}

inline std::vector<double> offsets_only(const BoundModel& model, const std::vector<double>& offset_coefs) {
  const auto off = model.offset_indices();
  if (offset_coefs.size() != off.size())
    throw UsageError("expected " + std::to_string(off.size()) + " offset coefficients, got " +
                     std::to_string(offset_coefs.size()));
  std::vector<double> full(static_cast<std::size_t>(model.p()), 0.0);
  for (std::size_t k = 0; k < off.size(); ++k) full[static_cast<std::size_t>(off[k])] = offset_coefs[k];
  return full;
}

}  // namespace detail

inline MpleRows mple_rows(const Network& net, const BoundModel& model, MpleMode mode,
                          const ConstraintSpec& constraints = {}, const std::vector<double>& offset_coefs = {}) {
  model.check_network(net);
  const Constraints c(constraints, net);
  c.validate(net);
  const std::vector<double> full = detail::offsets_only(model, offset_coefs);
  const auto free = model.free_indices();
  const auto q = static_cast<Eigen::Index>(free.size());
  MpleRows out;
  out.mode = mode;
  for (int k : free) out.names.push_back(model.names()[static_cast<std::size_t>(k)]);

  std::vector<std::vector<double>> rows;  // response, predictor..., shift
  std::vector<double> weights;
  std::map<std::vector<double>, std::size_t> index;
  std::vector<double> delta(static_cast<std::size_t>(model.p()));
  for_each_free_dyad(net, c, [&](Dyad d) {
    model.change_stats(net, d.tail, d.head, delta.data());
    std::vector<double> row;
    row.push_back(net.has_edge(d) ? 1.0 : 0.0);
    for (int k : free) row.push_back(delta[static_cast<std::size_t>(k)]);
    row.push_back(detail::offset_term(model, full, delta.data()));
    if (mode == MpleMode::compressed) {
      auto [it, fresh] = index.emplace(row, rows.size());
      if (fresh) {
        rows.push_back(std::move(row));
        weights.push_back(1);
      } else {
        weights[it->second] += 1;
      }
    } else {
      rows.push_back(std::move(row));
      weights.push_back(1);
      out.dyads.push_back(d);
    }
  });

  const auto R = static_cast<Eigen::Index>(rows.size());
  out.response.resize(R);
  out.predictor.resize(R, q);
  out.weights.resize(R);
  out.offset_shift.resize(R);
  for (Eigen::Index r = 0; r < R; ++r) {
    const auto& row = rows[static_cast<std::size_t>(r)];
    out.response[r] = row[0];
    for (Eigen::Index k = 0; k < q; ++k) out.predictor(r, k) = row[static_cast<std::size_t>(k + 1)];
    out.offset_shift[r] = row.back();
    out.weights[r] = weights[static_cast<std::size_t>(r)];
  }
  if (mode == MpleMode::array) {
    const int n = net.size();
    const double na = std::numeric_limits<double>::quiet_NaN();
    out.array_response = Eigen::MatrixXd::Constant(n, n, na);
    out.array.assign(static_cast<std::size_t>(q), Eigen::MatrixXd::Constant(n, n, na));
    for (Eigen::Index r = 0; r < R; ++r) {
      const Dyad d = out.dyads[static_cast<std::size_t>(r)];
      auto put = [&](Vertex a, Vertex b) {
        out.array_response(a, b) = out.response[r];
        for (Eigen::Index k = 0; k < q; ++k) out.array[static_cast<std::size_t>(k)](a, b) = out.predictor(r, k);
      };
      put(d.tail, d.head);
      if (!net.directed()) put(d.head, d.tail);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Weighted logistic regression

struct LogisticFit {
  Eigen::VectorXd coef;
  Eigen::MatrixXd J;  // negative Hessian of the log pseudo-likelihood at coef
  double loglik = 0;
  int iterations = 0;
  double grad_norm = 0;
};

namespace detail {

inline double log1pexp(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }
inline double logistic(double x) { return x >= 0 ? 1 / (1 + std::exp(-x)) : std::exp(x) / (1 + std::exp(x)); }

}  // namespace detail

// Newton-Raphson on the weighted Bernoulli likelihood. Rows whose offset
// shift is infinite are structurally determined and left out.
inline LogisticFit logistic_fit(const MpleRows& rows, std::optional<Eigen::VectorXd> init = std::nullopt) {
  const Eigen::Index q = rows.predictor.cols();
  std::vector<Eigen::Index> use;
  for (Eigen::Index r = 0; r < rows.rows(); ++r) {
    const double s = rows.offset_shift[r];
    if (std::isinf(s)) {
      if ((s < 0 && rows.response[r] == 1) || (s > 0 && rows.response[r] == 0))
        throw DataError("the observed network has probability zero under the offset coefficients");
      continue;
    }
    if (rows.weights[r] > 0) use.push_back(r);
  }
  LogisticFit fit;
  fit.coef = init ? *init : Eigen::VectorXd::Zero(q);
  if (fit.coef.size() != q) throw UsageError("logistic fit start has the wrong length");
  auto evaluate = [&](const Eigen::VectorXd& b, Eigen::VectorXd* grad, Eigen::MatrixXd* hess) {
    double ll = 0;
    if (grad) grad->setZero(q);
    if (hess) hess->setZero(q, q);
    for (Eigen::Index r : use) {
      const double w = rows.weights[r], y = rows.response[r];
      const double eta = rows.predictor.row(r).dot(b) + rows.offset_shift[r];
      ll += w * (y * eta - detail::log1pexp(eta));
      if (grad || hess) {
        const double p = detail::logistic(eta);
        if (grad) *grad += w * (y - p) * rows.predictor.row(r).transpose();
        if (hess) hess->selfadjointView<Eigen::Lower>().rankUpdate(rows.predictor.row(r).transpose(), w * p * (1 - p));
      }
    }
    if (hess) *hess = hess->selfadjointView<Eigen::Lower>();
    return ll;
  };
  auto null_direction = [&](const Eigen::MatrixXd& H) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
    const Eigen::VectorXd v = es.eigenvectors().col(0);
    std::string s;
    for (Eigen::Index k = 0; k < q; ++k) {
      if (std::abs(v[k]) < 1e-8) continue;
      if (!s.empty()) s += " ";
      s += rows.names.empty() ? std::to_string(k) : rows.names[static_cast<std::size_t>(k)];
      s += "=" + format_double(std::round(v[k] * 1e6) / 1e6);
    }
    return s;
  };
  if (q == 0) {
    fit.loglik = evaluate(fit.coef, nullptr, nullptr);
    fit.J.resize(0, 0);
    return fit;
  }

  Eigen::VectorXd g(q);
  Eigen::MatrixXd H(q, q);
  double ll = evaluate(fit.coef, &g, &H);
  for (int it = 0; it < 200; ++it) {
    fit.iterations = it;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H, Eigen::EigenvaluesOnly);
    const double maxe = es.eigenvalues().maxCoeff();
    if (!(es.eigenvalues().minCoeff() > 1e-12 * std::max(1.0, maxe))) {
      if (fit.coef.cwiseAbs().maxCoeff() > 20 || maxe <= 0)
        throw NumericalError("separation detected: the pseudo-likelihood has no finite maximizer");
      throw NumericalError("MPLE design is rank deficient along " + null_direction(H));
    }
    const Eigen::VectorXd step = H.ldlt().solve(g);
    const bool small_grad = g.cwiseAbs().maxCoeff() < 1e-10;
    const bool small_step = step.cwiseAbs().maxCoeff() < 1e-8 * (1 + fit.coef.cwiseAbs().maxCoeff());
    if (small_grad && small_step) break;
    if (step.cwiseAbs().maxCoeff() < 1e-14 * (1 + fit.coef.cwiseAbs().maxCoeff())) break;  // floating-point floor
    double t = 1;
    Eigen::VectorXd next = fit.coef + step;
    double ll_next = evaluate(next, nullptr, nullptr);
    while (ll_next < ll - 1e-12 * std::abs(ll) && t > 1e-6) {
      t /= 2;
      next = fit.coef + t * step;
      ll_next = evaluate(next, nullptr, nullptr);
    }
    fit.coef = next;
    ll = evaluate(fit.coef, &g, &H);
    if (fit.coef.cwiseAbs().maxCoeff() > 50)
      throw NumericalError("separation detected: a coefficient exceeds 50 in magnitude with nonvanishing gradient");
    if (it == 199) throw NumericalError("logistic regression did not converge in 200 iterations");
  }
  fit.loglik = ll;
  fit.grad_norm = g.cwiseAbs().maxCoeff();
  fit.J = H;
  return fit;
}

// ---------------------------------------------------------------------------
// Fit results

struct TerminationRecord {
  std::string kind;
  bool converged = false;
  std::string reason;
  double statistic = std::numeric_limits<double>::quiet_NaN();
  double p_value = std::numeric_limits<double>::quiet_NaN();
};

struct FitResult {
  std::string method;   // mple, mcmle, cd
  std::string se_kind;  // naive, sandwich, mcmle, none
  std::vector<std::string> names;
  std::vector<bool> offset;
  std::vector<double> coefs;  // all statistics; offsets at their fixed values
  Eigen::MatrixXd vcov;       // all statistics; zero rows/columns for offsets
  int iterations = 0;
  TerminationRecord termination;
  std::optional<SampleMatrix> sample;
  std::vector<std::vector<double>> trace;  // coefficient vector per iteration
  double mple_loglik = std::numeric_limits<double>::quiet_NaN();

  std::vector<double> se() const {
    std::vector<double> out;
    for (std::size_t k = 0; k < coefs.size(); ++k)
      out.push_back(offset[k] ? std::numeric_limits<double>::quiet_NaN()
                              : std::sqrt(std::max(0.0, vcov(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)))));
    return out;
  }
  std::vector<double> free_coefs() const {
    std::vector<double> out;
    for (std::size_t k = 0; k < coefs.size(); ++k)
      if (!offset[k]) out.push_back(coefs[k]);
    return out;
  }
};

inline void write_fit_report(std::ostream& os, const FitResult& f) {
  os << "# coefficients\n";
  write_tsv_row(os, std::vector<std::string>{"term", "estimate", "se", "offset"});
  const auto se = f.se();
  for (std::size_t k = 0; k < f.coefs.size(); ++k)
    write_tsv_row(os, std::vector<std::string>{f.names[k], format_double(f.coefs[k]), format_double(se[k]),
                                               f.offset[k] ? "1" : "0"});
  os << "# vcov\n";
  std::vector<std::string> header{"term"};
  header.insert(header.end(), f.names.begin(), f.names.end());
  write_tsv_row(os, header);
  for (std::size_t i = 0; i < f.names.size(); ++i) {
    std::vector<std::string> row{f.names[i]};
    for (std::size_t j = 0; j < f.names.size(); ++j)
      row.push_back(format_double(f.vcov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))));
    write_tsv_row(os, row);
  }
  os << "# termination\n";
  write_tsv_row(os, std::vector<std::string>{"key", "value"});
  write_tsv_row(os, std::vector<std::string>{"method", f.method});
  write_tsv_row(os, std::vector<std::string>{"se", f.se_kind});
  write_tsv_row(os, std::vector<std::string>{"criterion", f.termination.kind});
  write_tsv_row(os, std::vector<std::string>{"converged", f.termination.converged ? "1" : "0"});
  write_tsv_row(os, std::vector<std::string>{"iterations", std::to_string(f.iterations)});
  write_tsv_row(os, std::vector<std::string>{"statistic", format_double(f.termination.statistic)});
  write_tsv_row(os, std::vector<std::string>{"p_value", format_double(f.termination.p_value)});
  write_tsv_row(os, std::vector<std::string>{"reason", f.termination.reason});
}

namespace detail {

inline FitResult blank_fit(const BoundModel& model, const std::vector<double>& full) {
  FitResult f;
  f.names = model.names();
  f.offset = model.offset_mask();
  f.coefs = full;
  f.vcov = Eigen::MatrixXd::Zero(model.p(), model.p());
  return f;
}

inline void put_free_vcov(FitResult& f, const BoundModel& model, const Eigen::MatrixXd& v) {
  const auto free = model.free_indices();
  for (std::size_t a = 0; a < free.size(); ++a)
    for (std::size_t b = 0; b < free.size(); ++b) f.vcov(free[a], free[b]) = v(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
}

inline Eigen::MatrixXd pinv(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  const Eigen::VectorXd ev = es.eigenvalues();
  const double tol = 1e-12 * std::max(1.0, ev.cwiseAbs().maxCoeff());
  Eigen::VectorXd inv(ev.size());
  for (Eigen::Index k = 0; k < ev.size(); ++k) inv[k] = ev[k] > tol ? 1 / ev[k] : 0;
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

inline Draws free_columns(const Draws& X, const BoundModel& model) {
  const auto free = model.free_indices();
  Draws out(X.rows(), static_cast<Eigen::Index>(free.size()));
  for (std::size_t k = 0; k < free.size(); ++k) out.col(static_cast<Eigen::Index>(k)) = X.col(free[k]);
  return out;
}

inline Eigen::VectorXd free_part(const StatVector& g, const BoundModel& model) {
  const auto free = model.free_indices();
  Eigen::VectorXd out(static_cast<Eigen::Index>(free.size()));
  for (std::size_t k = 0; k < free.size(); ++k) out[static_cast<Eigen::Index>(k)] = g[static_cast<std::size_t>(free[k])];
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// MPLE

enum class SeKind { naive, sandwich };

inline SeKind parse_se_kind(const std::string& s) {
  if (s == "naive") return SeKind::naive;
  if (s == "sandwich") return SeKind::sandwich;
  throw UsageError("unknown standard-error kind '" + s + "' (expected naive or sandwich)");
}

struct MpleControl {
  ConstraintSpec constraints;
  std::vector<double> offset_coefs;
  SeKind se = SeKind::naive;
  ProposalKind proposal = ProposalKind::automatic;
  SamplerConfig sampler;  // used for the sandwich estimate
};

// Pseudo-likelihood score sum_ij Delta_ij (y_ij - p_ij) on network y.
inline Eigen::VectorXd pseudo_score(const Network& y, const BoundModel& model, const Constraints& c,
                                    const std::vector<double>& full) {
  const auto free = model.free_indices();
  Eigen::VectorXd u = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(free.size()));
  std::vector<double> delta(static_cast<std::size_t>(model.p()));
  for_each_free_dyad(y, c, [&](Dyad d) {
    model.change_stats(y, d.tail, d.head, delta.data());
    double eta = detail::offset_term(model, full, delta.data());
    if (std::isinf(eta)) return;
    for (int k : free) eta += full[static_cast<std::size_t>(k)] * delta[static_cast<std::size_t>(k)];
    const double r = (y.has_edge(d) ? 1.0 : 0.0) - detail::logistic(eta);
    for (std::size_t k = 0; k < free.size(); ++k)
      u[static_cast<Eigen::Index>(k)] += delta[static_cast<std::size_t>(free[k])] * r;
  });
  return u;
}

inline FitResult mple(const Network& net, const BoundModel& model, const MpleControl& ctl = {}) {
  const MpleRows rows = mple_rows(net, model, MpleMode::compressed, ctl.constraints, ctl.offset_coefs);
  const LogisticFit lf = logistic_fit(rows);
  std::vector<double> full = detail::offsets_only(model, ctl.offset_coefs);
  const auto free = model.free_indices();
  for (std::size_t k = 0; k < free.size(); ++k) full[static_cast<std::size_t>(free[k])] = lf.coef[static_cast<Eigen::Index>(k)];
  FitResult f = detail::blank_fit(model, full);
  f.method = "mple";
  f.mple_loglik = lf.loglik;
  f.iterations = lf.iterations;
  f.termination = {"mple", true, "logistic regression converged", lf.grad_norm, std::numeric_limits<double>::quiet_NaN()};
  const Eigen::MatrixXd Jinv = lf.J.size() ? Eigen::MatrixXd(lf.J.inverse()) : Eigen::MatrixXd();
  if (ctl.se == SeKind::naive || free.empty()) {
    f.se_kind = "naive";
    detail::put_free_vcov(f, model, Jinv);
    return f;
  }
  // sandwich: covariance of the pseudo-score over networks drawn at the MPLE
  f.se_kind = "sandwich";
  const Constraints c(ctl.constraints, net);
  ProposalConfig pc;
  pc.kind = ctl.proposal;
  pc.constraints = ctl.constraints;
  SamplerConfig cfg = ctl.sampler;
  cfg.target_ess.reset();
  std::vector<std::vector<Eigen::VectorXd>> scores(static_cast<std::size_t>(cfg.chains));
  run_chain(net, model, full, pc, cfg, [&](int chain, long long, const Network& y) {
    scores[static_cast<std::size_t>(chain)].push_back(pseudo_score(y, model, c, full));
  });
  std::vector<Eigen::VectorXd> all;
  for (auto& s : scores) all.insert(all.end(), s.begin(), s.end());
  const auto q = static_cast<Eigen::Index>(free.size());
  Draws U(static_cast<Eigen::Index>(all.size()), q);
  for (std::size_t s = 0; s < all.size(); ++s) U.row(static_cast<Eigen::Index>(s)) = all[s].transpose();
  const Eigen::MatrixXd V = sample_cov(U);
  detail::put_free_vcov(f, model, Jinv * V * Jinv);
  return f;
}

// ---------------------------------------------------------------------------
// MCMLE

struct McmleStep {
  Eigen::VectorXd theta_next;
  double gamma = 0;          // boundary multiplier of g_obs about the sample centroid
  bool scaled = false;       // g_obs was pulled toward the centroid
  Eigen::VectorXd target;    // the (possibly scaled) statistic actually matched
  double objective_gain = 0; // surrogate log-likelihood ratio at theta_next
  Eigen::MatrixXd tilted_cov;
};

// One Monte Carlo maximum likelihood update from a sample drawn at theta_t.
// X holds the free statistics. Directions in which the sample does not vary
// are left untouched unless g_obs differs there, which is an error.
inline McmleStep mcmle_step(const Eigen::VectorXd& theta_t, const Draws& X, const Eigen::VectorXd& g_obs,
                            double depth = 0.95) {
  const Eigen::Index S = X.rows(), q = X.cols();
  if (theta_t.size() != q || g_obs.size() != q) throw UsageError("mcmle_step dimensions are inconsistent");
  if (S < 2) throw DataError("mcmle_step needs at least 2 draws");
  const Eigen::RowVectorXd mu = X.colwise().mean();
  const Eigen::MatrixXd Xc = X.rowwise() - mu;
  const Eigen::MatrixXd C = Xc.transpose() * Xc / static_cast<double>(S);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C);
  const double emax = std::max(0.0, es.eigenvalues().maxCoeff());
  std::vector<Eigen::Index> keep;
  for (Eigen::Index k = 0; k < q; ++k)
    if (es.eigenvalues()[k] > 1e-10 * std::max(emax, 1e-300)) keep.push_back(k);
  Eigen::MatrixXd U(q, static_cast<Eigen::Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) U.col(static_cast<Eigen::Index>(k)) = es.eigenvectors().col(keep[k]);
  const Eigen::VectorXd dev = g_obs - mu.transpose();
  const Eigen::VectorXd off = dev - U * (U.transpose() * dev);
  if (off.norm() > 1e-8 * (1 + g_obs.norm()))
    throw NumericalError("statistic not spanned: the observed statistics lie outside the span of the simulated sample");

  McmleStep out;
  out.theta_next = theta_t;
  out.tilted_cov = Eigen::MatrixXd::Zero(q, q);
  out.target = g_obs;
  if (keep.empty()) {
    out.gamma = HUGE_VAL;
    return out;
  }
  const Eigen::MatrixXd Z = Xc * U;  // S x r, centered
  const Eigen::VectorXd z_obs = U.transpose() * dev;
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(Z.cols());
  out.gamma = boundary_multiplier(Z, z_obs, zero);
  const Eigen::VectorXd z = scale_into_hull(Z, z_obs, zero, depth);
  out.scaled = !(z.array() == z_obs.array()).all();
  out.target = mu.transpose() + U * z;

  // maximize eta' z - log mean exp(eta' Z_s)
  const Eigen::Index r = Z.cols();
  auto objective = [&](const Eigen::VectorXd& eta, Eigen::VectorXd* grad, Eigen::MatrixXd* hess) {
    const Eigen::VectorXd a = Z * eta;
    const double m = a.maxCoeff();
    const Eigen::ArrayXd w = (a.array() - m).exp();
    const double sw = w.sum();
    const double value = eta.dot(z) - (m + std::log(sw / static_cast<double>(S)));
    if (grad || hess) {
      const Eigen::VectorXd mean = Z.transpose() * (w / sw).matrix();
      if (grad) *grad = z - mean;
      if (hess) {
        const Eigen::MatrixXd Zc = Z.rowwise() - mean.transpose();
        *hess = Zc.transpose() * ((w / sw).matrix().asDiagonal()) * Zc;
      }
    }
    return value;
  };
  Eigen::VectorXd eta = Eigen::VectorXd::Zero(r), g(r);
  Eigen::MatrixXd H(r, r);
  double f = objective(eta, &g, &H);
  for (int it = 0; it < 100 && g.cwiseAbs().maxCoeff() > 1e-10 * (1 + z.cwiseAbs().maxCoeff()); ++it) {
    const Eigen::VectorXd step = H.ldlt().solve(g);
    double t = 1;
    Eigen::VectorXd next = eta + step;
    double fn = objective(next, nullptr, nullptr);
    while (fn < f && t > 1e-8) {
      t /= 2;
      next = eta + t * step;
      fn = objective(next, nullptr, nullptr);
    }
    if (fn < f) break;
    eta = next;
    f = objective(eta, &g, &H);
  }
  out.objective_gain = f;
  out.theta_next = theta_t + U * eta;
  out.tilted_cov = U * H * U.transpose();
  return out;
}

enum class TerminationKind { hotelling, hummel, confidence };

inline TerminationKind parse_termination(const std::string& s) {
  if (s == "hotelling" || s == "Hotelling") return TerminationKind::hotelling;
  if (s == "hummel" || s == "Hummel") return TerminationKind::hummel;
  if (s == "confidence") return TerminationKind::confidence;
  throw UsageError("unknown termination criterion '" + s + "' (expected hotelling, hummel or confidence)");
}

inline std::string termination_name(TerminationKind k) {
  switch (k) {
    case TerminationKind::hotelling: return "hotelling";
    case TerminationKind::hummel: return "hummel";
    case TerminationKind::confidence: return "confidence";
  }
  return "?";
}

struct TerminationControl {
  TerminationKind kind = TerminationKind::confidence;
  double hotelling_alpha = 0.5;
  double depth = 0.95;
  double confidence_alpha = 0.05;
  double confidence_delta = 0.25;
};

struct TerminationCheck {
  bool stop = false;
  double statistic = std::numeric_limits<double>::quiet_NaN();
  double p_value = std::numeric_limits<double>::quiet_NaN();
  std::string detail;
};

// X: free statistics sampled at the current estimate; gammas: boundary
// multipliers of g_obs for every iteration so far (latest last).
inline TerminationCheck check_termination(const TerminationControl& ctl, const Draws& X, const Eigen::VectorXd& g_obs,
                                          const std::vector<double>& gammas) {
  TerminationCheck out;
  if (ctl.kind == TerminationKind::hummel) {
    const double need = 1 / ctl.depth;
    const std::size_t n = gammas.size();
    out.statistic = n ? gammas.back() : std::numeric_limits<double>::quiet_NaN();
    out.stop = n >= 2 && gammas[n - 1] >= need * (1 - 1e-7) && gammas[n - 2] >= need * (1 - 1e-7);
    out.detail = "boundary multiplier " + format_double(out.statistic);
    return out;
  }
  const auto cols = varying_columns(X);
  const Eigen::VectorXd mean = X.colwise().mean().transpose();
  // a constant column must match exactly
  for (Eigen::Index k = 0; k < X.cols(); ++k) {
    if (std::find(cols.begin(), cols.end(), k) != cols.end()) continue;
    if (std::abs(g_obs[k] - mean[k]) > 1e-9 * (1 + std::abs(g_obs[k]))) {
      out.statistic = HUGE_VAL;
      out.p_value = 0;
      out.detail = "observed statistic differs from a constant simulated statistic";
      return out;
    }
  }
  if (cols.empty()) {
    out.stop = true;
    out.statistic = 0;
    out.p_value = 1;
    out.detail = "no varying statistics";
    return out;
  }
  const Draws Y = select_columns(X, cols);
  Eigen::VectorXd d(static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) d[static_cast<Eigen::Index>(k)] = g_obs[cols[k]] - mean[cols[k]];
  const auto p = static_cast<double>(Y.cols());
  const BatchMeansCov bm = batch_means(Y);
  const Eigen::MatrixXd Vmean = bm.sigma / static_cast<double>(Y.rows());
  if (ctl.kind == TerminationKind::hotelling) {
    out.statistic = d.dot(detail::pinv(Vmean) * d);
    const double nu = static_cast<double>(bm.batches - 1);
    const double df2 = nu - p + 1;
    if (df2 <= 0) throw DataError("too few batches for the Hotelling test");
    boost::math::fisher_f dist(p, df2);
    out.p_value = boost::math::cdf(boost::math::complement(dist, std::max(0.0, out.statistic * df2 / (p * nu))));
    out.stop = out.p_value > ctl.hotelling_alpha;
    out.detail = "Hotelling T2 " + format_double(out.statistic);
    return out;
  }
  // confidence: Mahalanobis distance in the metric of the statistic's
  // covariance, plus the radius of the (1 - alpha) ellipsoid for the mean
  const Eigen::MatrixXd Lambda = sample_cov(Y);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Lambda);
  const Eigen::VectorXd ev = es.eigenvalues().cwiseMax(1e-300);
  const Eigen::MatrixXd Lih = es.eigenvectors() * ev.cwiseSqrt().cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
  const double dist = (Lih * d).norm();
  const Eigen::MatrixXd M = Lih * Vmean * Lih;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> em(M, Eigen::EigenvaluesOnly);
  boost::math::chi_squared chi(p);
  const double qchi = boost::math::quantile(chi, 1 - ctl.confidence_alpha);
  const double radius = std::sqrt(qchi * std::max(0.0, em.eigenvalues().maxCoeff()));
  out.statistic = dist + radius;
  out.stop = out.statistic < ctl.confidence_delta;
  out.detail = "Mahalanobis upper bound " + format_double(out.statistic);
  return out;
}

// ---------------------------------------------------------------------------
// Contrastive divergence

struct CdControl {
  int steps = 8;            // Markov chain steps per restart
  long long samplesize = 1024;  // restarts per iteration
  int maxit = 60;
  double depth = 0.95;
  double stop_pvalue = 0.5;
  std::uint64_t seed = 0;
};

inline std::vector<double> cd_fit(const Network& net, const BoundModel& model, const ProposalConfig& proposal,
                                  const std::vector<double>& offset_coefs, const CdControl& ctl,
                                  std::optional<std::vector<double>> init = std::nullopt) {
  if (ctl.steps < 1) throw UsageError("contrastive divergence needs at least one step");
  if (ctl.samplesize < 2) throw UsageError("contrastive divergence sample size must be at least 2");
  model.check_network(net);
  std::vector<double> full = detail::offsets_only(model, offset_coefs);
  const auto free = model.free_indices();
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(free.size()));
  if (init) {
    if (init->size() != free.size()) throw UsageError("CD start has the wrong length");
    for (std::size_t k = 0; k < free.size(); ++k) theta[static_cast<Eigen::Index>(k)] = (*init)[k];
  }
  Network y = net;
  auto prop = proposal.make(y);
  Rng rng(ctl.seed);
  const StatVector g0 = model.summary(net);
  const Eigen::VectorXd g_obs = detail::free_part(g0, model);
  std::vector<double> scratch;
  std::vector<Dyad> accepted;
  for (int it = 0; it < ctl.maxit; ++it) {
    for (std::size_t k = 0; k < free.size(); ++k) full[static_cast<std::size_t>(free[k])] = theta[static_cast<Eigen::Index>(k)];
    Draws X(ctl.samplesize, static_cast<Eigen::Index>(free.size()));
    for (long long m = 0; m < ctl.samplesize; ++m) {
      StatVector cur = g0;
      accepted.clear();
      for (int s = 0; s < ctl.steps; ++s) {
        const StepOutcome o = mh_step(y, model, full, *prop, cur, rng, scratch);
        if (o.accepted) accepted.push_back(o.dyad);
      }
      for (std::size_t k = 0; k < free.size(); ++k)
        X(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(k)) = cur[static_cast<std::size_t>(free[k])];
      // restart from the observed network
      for (auto it2 = accepted.rbegin(); it2 != accepted.rend(); ++it2) {
        y.toggle(*it2);
        prop->commit(y, *it2);
      }
    }
    // stop once the restarts no longer drift away from g_obs on average
    const Eigen::VectorXd d = X.colwise().mean().transpose() - g_obs;
    const auto cols = varying_columns(X);
    if (cols.size() == static_cast<std::size_t>(X.cols()) && X.cols() > 0) {
      const Eigen::MatrixXd V = sample_cov(X) / static_cast<double>(X.rows());
      const double t2 = d.dot(detail::pinv(V) * d);
      boost::math::chi_squared chi(static_cast<double>(X.cols()));
      if (boost::math::cdf(boost::math::complement(chi, t2)) > ctl.stop_pvalue) break;
    }
    const McmleStep st = mcmle_step(theta, X, g_obs, ctl.depth);
    theta = st.theta_next;
    if (theta.size() && theta.cwiseAbs().maxCoeff() > 50)
      throw NumericalError("contrastive divergence diverged: a coefficient exceeds 50 in magnitude");
  }
  std::vector<double> out(theta.data(), theta.data() + theta.size());
  return out;
}

// ---------------------------------------------------------------------------
// MCMLE loop

enum class InitMethod { automatic, mple, cd, given };

inline InitMethod parse_init_method(const std::string& s) {
  if (s == "auto") return InitMethod::automatic;
  if (s == "mple") return InitMethod::mple;
  if (s == "cd") return InitMethod::cd;
  if (s == "given") return InitMethod::given;
  throw UsageError("unknown init method '" + s + "' (expected mple, cd or given)");
}

struct McmleControl {
  ConstraintSpec constraints;
  ProposalKind proposal = ProposalKind::automatic;
  std::vector<double> offset_coefs;
  SamplerConfig sampler;
  TerminationControl termination;
  int maxit = 60;
  InitMethod init = InitMethod::automatic;
  std::vector<double> init_coefs;  // free coefficients, for InitMethod::given
  CdControl cd;
};

// init=automatic: MPLE unless a degree bound makes the dyads dependent.
inline InitMethod resolve_init(InitMethod m, const ConstraintSpec& c) {
  if (m != InitMethod::automatic) return m;
  return c.bd ? InitMethod::cd : InitMethod::mple;
}

inline FitResult mcmle_fit(const Network& net, const BoundModel& model, const McmleControl& ctl,
                           std::optional<StatVector> g_obs_full = std::nullopt) {
  model.check_network(net);
  const auto free = model.free_indices();
  const auto q = static_cast<Eigen::Index>(free.size());
  std::vector<double> full = detail::offsets_only(model, ctl.offset_coefs);
  const StatVector gfull = g_obs_full ? *g_obs_full : model.summary(net);
  if (static_cast<int>(gfull.size()) != model.p()) throw UsageError("target statistics have the wrong length");
  const Eigen::VectorXd g_obs = detail::free_part(gfull, model);
  ProposalConfig pc;
  pc.kind = ctl.proposal;
  pc.constraints = ctl.constraints;

  Eigen::VectorXd theta(q);
  switch (resolve_init(ctl.init, ctl.constraints)) {
    case InitMethod::mple: {
      MpleControl mc;
      mc.constraints = ctl.constraints;
      mc.offset_coefs = ctl.offset_coefs;
      const FitResult m = mple(net, model, mc);
      const auto fc = m.free_coefs();
      for (Eigen::Index k = 0; k < q; ++k) theta[k] = fc[static_cast<std::size_t>(k)];
      break;
    }
    case InitMethod::cd: {
      CdControl cc = ctl.cd;
      cc.seed = ctl.sampler.seed ^ 0x9e3779b97f4a7c15ULL;
      const auto c = cd_fit(net, model, pc, ctl.offset_coefs, cc);
      for (Eigen::Index k = 0; k < q; ++k) theta[k] = c[static_cast<std::size_t>(k)];
      break;
    }
    case InitMethod::given:
      if (static_cast<Eigen::Index>(ctl.init_coefs.size()) != q)
        throw UsageError("expected " + std::to_string(q) + " initial coefficients, got " + std::to_string(ctl.init_coefs.size()));
      for (Eigen::Index k = 0; k < q; ++k) theta[k] = ctl.init_coefs[static_cast<std::size_t>(k)];
      break;
    case InitMethod::automatic: break;
  }
  for (Eigen::Index k = 0; k < q; ++k)
    if (!std::isfinite(theta[k])) throw NumericalError("initial coefficients are not finite");

  FitResult f = detail::blank_fit(model, full);
  f.method = "mcmle";
  f.se_kind = "mcmle";
  f.termination.kind = termination_name(ctl.termination.kind);
  auto set_full = [&](const Eigen::VectorXd& th) {
    for (Eigen::Index k = 0; k < q; ++k) full[static_cast<std::size_t>(free[static_cast<std::size_t>(k)])] = th[k];
  };
  Network current = net;
  std::vector<double> gammas;
  Eigen::MatrixXd info;
  for (int it = 1; it <= ctl.maxit; ++it) {
    f.iterations = it;
    set_full(theta);
    f.trace.push_back(full);
    SamplerConfig cfg = ctl.sampler;
    cfg.seed = ctl.sampler.seed + 1000003ULL * static_cast<std::uint64_t>(it);
    const SimulationResult sim = simulate(current, model, full, pc, cfg);
    current = sim.networks.front();
    const Draws X = detail::free_columns(sim.sample.pooled(), model);
    const McmleStep step = mcmle_step(theta, X, g_obs, ctl.termination.depth);
    gammas.push_back(step.gamma);
    const TerminationCheck chk = check_termination(ctl.termination, X, g_obs, gammas);
    f.termination.statistic = chk.statistic;
    f.termination.p_value = chk.p_value;
    f.sample = sim.sample;
    theta = step.theta_next;
    info = step.tilted_cov;
    if (chk.stop) {
      f.termination.converged = true;
      f.termination.reason = chk.detail;
      break;
    }
    if (q && theta.cwiseAbs().maxCoeff() > 1e6) throw NumericalError("MCMLE diverged");
  }
  set_full(theta);
  f.coefs = full;
  if (!f.termination.converged) f.termination.reason = "iteration limit reached without meeting the criterion";
  if (q) detail::put_free_vcov(f, model, detail::pinv(info));
  return f;
}

}  // namespace ergm
