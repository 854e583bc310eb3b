// Polygon energy minimization and multiple-shooting two-point solver.

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "geoblock/connect.hpp"
#include "geoblock/errors.hpp"
#include "integrator.hpp"

namespace geoblock {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

struct EdgeTerms {
  double e;
  double grad[4];     // (X0, Y0, X1, Y1)
  double hess[4][4];
};

EdgeTerms edge_terms(const MetricProfile& profile, const CoverPoint& a, const CoverPoint& b) {
  const double dx = b.X - a.X, dy = b.Y - a.Y;
  const ProfileValue v = profile.eval(0.5 * (a.Y + b.Y));
  const double G = v.f * v.f;
  const double G1 = 2.0 * v.f * v.df;
  const double G2 = 2.0 * (v.df * v.df + v.f * v.d2f);
  EdgeTerms t{};
  t.e = G * dx * dx + dy * dy;
  // Partials in (dx, dy, ybar).
  const double p[3] = {2.0 * G * dx, 2.0 * dy, G1 * dx * dx};
  const double H[3][3] = {{2.0 * G, 0.0, 2.0 * G1 * dx}, {0.0, 2.0, 0.0}, {2.0 * G1 * dx, 0.0, G2 * dx * dx}};
  const double A[3][4] = {{-1, 0, 1, 0}, {0, -1, 0, 1}, {0, 0.5, 0, 0.5}};
  for (int i = 0; i < 4; ++i) {
    t.grad[i] = 0.0;
    for (int k = 0; k < 3; ++k) t.grad[i] += A[k][i] * p[k];
  }
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      double s = 0.0;
      for (int k = 0; k < 3; ++k) {
        for (int l = 0; l < 3; ++l) s += A[k][i] * H[k][l] * A[l][j];
      }
      t.hess[i][j] = s;
    }
  }
  return t;
}

// Free-vertex layout shared by energy, gradient and Hessian assembly.
struct Layout {
  std::size_t edges;
  std::size_t vars;
  bool closed;
  std::size_t nverts;

  // Variable index of vertex k (or -1 when fixed).
  long var(std::size_t k) const {
    if (closed) return static_cast<long>(2 * (k % nverts));
    if (k == 0 || k + 1 == nverts) return -1;
    return static_cast<long>(2 * (k - 1));
  }
};

Layout layout_of(const Polygon& poly) {
  Layout L{};
  L.closed = poly.closed;
  L.nverts = poly.vertices.size();
  L.edges = poly.closed ? L.nverts : L.nverts - 1;
  L.vars = poly.closed ? 2 * L.nverts : 2 * (L.nverts - 2);
  return L;
}

CoverPoint vertex(const Polygon& poly, std::size_t k) {
  if (poly.closed && k == poly.vertices.size()) {
    const CoverPoint& v = poly.vertices.front();
    return {v.X + static_cast<double>(poly.offset.m), v.Y + static_cast<double>(poly.offset.n)};
  }
  return poly.vertices[k];
}

double energy(const MetricProfile& profile, const Polygon& poly) {
  const Layout L = layout_of(poly);
  double s = 0.0;
  for (std::size_t i = 0; i < L.edges; ++i) {
    const CoverPoint a = vertex(poly, i), b = vertex(poly, i + 1);
    const double dx = b.X - a.X, dy = b.Y - a.Y;
    const double f = profile.f(0.5 * (a.Y + b.Y));
    s += f * f * dx * dx + dy * dy;
  }
  return static_cast<double>(L.edges) * s;
}

void apply_step(Polygon& poly, const Layout& L, const Eigen::VectorXd& d) {
  for (std::size_t k = 0; k < poly.vertices.size(); ++k) {
    const long v = L.var(k);
    if (v < 0) continue;
    poly.vertices[k].X += d[v];
    poly.vertices[k].Y += d[v + 1];
  }
}

double edge_length(const MetricProfile& profile, const CoverPoint& a, const CoverPoint& b) {
  const double f = profile.f(0.5 * (a.Y + b.Y));
  return std::hypot(f * (b.X - a.X), b.Y - a.Y);
}

}  // namespace

double polygon_length(const MetricProfile& profile, const Polygon& poly) {
  if (poly.vertices.size() < 2 && !poly.closed) return 0.0;
  const std::size_t edges = poly.closed ? poly.vertices.size() : poly.vertices.size() - 1;
  double s = 0.0;
  for (std::size_t i = 0; i < edges; ++i) {
    s += edge_length(profile, vertex(poly, i), vertex(poly, i + 1));
  }
  return s;
}

ShortenResult shorten(const MetricProfile& profile, Polygon poly, const ShortenOptions& opts) {
  ShortenResult res;
  if (poly.vertices.size() < 3) {
    throw Error(ErrorKind::InvalidArgument, "shorten: polygon needs at least three vertices");
  }
  const Layout L = layout_of(poly);
  const double scale = static_cast<double>(L.edges);
  double E = energy(profile, poly);
  double mu = 1e-6;
  Eigen::SimplicialLDLT<SpMat> solver;
  for (int it = 0; it < opts.max_iterations; ++it) {
    res.iterations = it + 1;
    Eigen::VectorXd g = Eigen::VectorXd::Zero(static_cast<long>(L.vars));
    std::vector<Triplet> trips;
    trips.reserve(L.edges * 16 + L.vars);
    for (std::size_t i = 0; i < L.edges; ++i) {
      const EdgeTerms t = edge_terms(profile, vertex(poly, i), vertex(poly, i + 1));
      const long idx[4] = {L.var(i), L.var(i) < 0 ? -1 : L.var(i) + 1, L.var(i + 1),
                           L.var(i + 1) < 0 ? -1 : L.var(i + 1) + 1};
      for (int a = 0; a < 4; ++a) {
        if (idx[a] < 0) continue;
        g[idx[a]] += scale * t.grad[a];
        for (int b = 0; b < 4; ++b) {
          if (idx[b] < 0) continue;
          trips.emplace_back(idx[a], idx[b], scale * t.hess[a][b]);
        }
      }
    }
    const double gnorm = g.lpNorm<Eigen::Infinity>();
    if (gnorm <= opts.gradient_tol * std::max(1.0, E)) {
      res.converged = true;
      break;
    }
    SpMat H(static_cast<long>(L.vars), static_cast<long>(L.vars));
    H.setFromTriplets(trips.begin(), trips.end());
    double diag_scale = 0.0;
    for (long k = 0; k < H.outerSize(); ++k) diag_scale = std::max(diag_scale, std::abs(H.coeff(k, k)));
    bool accepted = false;
    for (int tries = 0; tries < 60 && !accepted; ++tries) {
      SpMat Hm = H;
      for (long k = 0; k < Hm.rows(); ++k) Hm.coeffRef(k, k) += mu * diag_scale;
      solver.compute(Hm);
      if (solver.info() != Eigen::Success || (solver.vectorD().array() <= 0.0).any()) {
        mu = std::max(mu * 10.0, 1e-12);
        continue;
      }
      const Eigen::VectorXd d = solver.solve(-g);
      Polygon trial = poly;
      apply_step(trial, L, d);
      const double Et = energy(profile, trial);
      if (std::isfinite(Et) && Et <= E) {
        const double dE = E - Et;
        poly = std::move(trial);
        E = Et;
        mu = std::max(mu / 4.0, 1e-15);
        accepted = true;
        if (d.lpNorm<Eigen::Infinity>() < 1e-15 && dE == 0.0) {
          res.converged = gnorm <= 1e-6 * std::max(1.0, E);
          res.polygon = poly;
          res.length = polygon_length(profile, poly);
          return res;
        }
      } else {
        mu = std::max(mu * 8.0, 1e-12);
      }
    }
    if (!accepted) break;
  }
  res.polygon = std::move(poly);
  res.length = polygon_length(profile, res.polygon);
  return res;
}

// ---- multiple shooting ------------------------------------------------------

namespace {

using State3 = std::array<double, 3>;
using State9 = std::array<double, 9>;

double heading_between(const MetricProfile& profile, const CoverPoint& a, const CoverPoint& b) {
  const double f = profile.f(0.5 * (a.Y + b.Y));
  return std::atan2(b.Y - a.Y, f * (b.X - a.X));
}

// Resample a polyline into n segments of equal coordinate length.
std::vector<CoverPoint> resample(const std::vector<CoverPoint>& pts, std::size_t n) {
  std::vector<double> cum(pts.size(), 0.0);
  for (std::size_t i = 1; i < pts.size(); ++i) {
    cum[i] = cum[i - 1] + std::hypot(pts[i].X - pts[i - 1].X, pts[i].Y - pts[i - 1].Y);
  }
  std::vector<CoverPoint> out;
  out.reserve(n + 1);
  const double total = cum.back();
  std::size_t j = 0;
  for (std::size_t k = 0; k <= n; ++k) {
    if (k == n) {
      out.push_back(pts.back());
      break;
    }
    const double s = total * static_cast<double>(k) / static_cast<double>(n);
    while (j + 2 < pts.size() && cum[j + 1] < s) ++j;
    const double seg = cum[j + 1] - cum[j];
    const double u = seg > 0.0 ? (s - cum[j]) / seg : 0.0;
    out.push_back({pts[j].X + u * (pts[j + 1].X - pts[j].X), pts[j].Y + u * (pts[j + 1].Y - pts[j].Y)});
  }
  return out;
}

// Point and heading at fraction s of the polygon length.
std::pair<CoverPoint, double> polygon_at(const MetricProfile& profile, const std::vector<CoverPoint>& v,
                                         const std::vector<double>& cum, double s) {
  std::size_t j = static_cast<std::size_t>(
      std::upper_bound(cum.begin(), cum.end(), s) - cum.begin());
  j = std::clamp<std::size_t>(j, 1, v.size() - 1) - 1;
  const double seg = cum[j + 1] - cum[j];
  const double u = seg > 0.0 ? std::clamp((s - cum[j]) / seg, 0.0, 1.0) : 0.0;
  const CoverPoint p{v[j].X + u * (v[j + 1].X - v[j].X), v[j].Y + u * (v[j + 1].Y - v[j].Y)};
  return {p, heading_between(profile, v[j], v[j + 1])};
}

struct Shooting {
  const MetricProfile& profile;
  CoverPoint P, Q;
  std::size_t M;
  FlowOptions flow;

  // Unknown layout: [theta0, (X,Y,theta) for nodes 1..M-1, ell].
  std::size_t size() const { return 3 * M - 1; }

  State3 node(const Eigen::VectorXd& u, std::size_t k) const {
    if (k == 0) return {P.X, P.Y, u[0]};
    const std::size_t b = 1 + 3 * (k - 1);
    return {u[static_cast<long>(b)], u[static_cast<long>(b + 1)], u[static_cast<long>(b + 2)]};
  }

  State9 propagate(const State3& z, double h) const {
    detail::VariationalSystem sys{&profile};
    detail::Driver<9, detail::VariationalSystem> drv(sys, flow);
    State9 x{z[0], z[1], z[2], 0, 1, 0, 0, 0, 1};
    drv.advance(x, 0.0, h, std::numeric_limits<double>::infinity(),
                [](double, const State9&, double, const State9&) { return true; });
    return x;
  }

  Eigen::VectorXd residual(const Eigen::VectorXd& u, SpMat* jac) const {
    const double ell = u[static_cast<long>(size() - 1)];
    const double h = ell / static_cast<double>(M);
    Eigen::VectorXd r(static_cast<long>(size()));
    std::vector<Triplet> trips;
    for (std::size_t k = 0; k < M; ++k) {
      const State3 z = node(u, k);
      const State9 x = propagate(z, h);
      const ProfileValue v = profile.eval(x[1]);
      const double c = std::cos(x[2]);
      const double rhs[3] = {c / v.f, std::sin(x[2]), v.df * c / v.f};
      const std::size_t row = 3 * k;
      const bool last = k + 1 == M;
      const int rows = last ? 2 : 3;
      if (last) {
        r[static_cast<long>(row)] = x[0] - Q.X;
        r[static_cast<long>(row + 1)] = x[1] - Q.Y;
      } else {
        const State3 n = node(u, k + 1);
        for (int i = 0; i < 3; ++i) r[static_cast<long>(row + i)] = x[i] - n[i];
      }
      if (jac == nullptr) continue;
      for (int i = 0; i < rows; ++i) {
        const long R = static_cast<long>(row + i);
        // Column for theta_k (and X_k, Y_k when the node is free).
        const double dY = x[3 + i], dT = x[6 + i];
        if (k == 0) {
          trips.emplace_back(R, 0, dT);
        } else {
          const long b = static_cast<long>(1 + 3 * (k - 1));
          trips.emplace_back(R, b, i == 0 ? 1.0 : 0.0);
          trips.emplace_back(R, b + 1, dY);
          trips.emplace_back(R, b + 2, dT);
        }
        trips.emplace_back(R, static_cast<long>(size() - 1), rhs[i] / static_cast<double>(M));
        if (!last) trips.emplace_back(R, static_cast<long>(1 + 3 * k + i), -1.0);
      }
    }
    if (jac != nullptr) {
      jac->resize(static_cast<long>(size()), static_cast<long>(size()));
      jac->setFromTriplets(trips.begin(), trips.end());
    }
    return r;
  }
};

BvpSolution newton_polish(const Shooting& S, Eigen::VectorXd u, const BvpOptions& opts) {
  const CoverPoint P = S.P, Q = S.Q;
  const double scale = std::max({1.0, std::abs(Q.X), std::abs(Q.Y), std::abs(P.X), std::abs(P.Y)});
  const double target = std::max(opts.residual_tol, 64.0 * std::numeric_limits<double>::epsilon() * scale);
  SpMat J;
  Eigen::VectorXd r = S.residual(u, &J);
  double rn = r.lpNorm<Eigen::Infinity>();
  Eigen::SparseLU<SpMat> lu;
  int poor = 0;
  for (int it = 0; it < opts.max_newton && rn > target; ++it) {
    lu.compute(J);
    if (lu.info() != Eigen::Success) break;
    const Eigen::VectorXd d = lu.solve(-r);
    if (lu.info() != Eigen::Success || !d.allFinite()) break;
    double lambda = 1.0;
    bool improved = false;
    for (int bt = 0; bt < 12; ++bt, lambda *= 0.5) {
      Eigen::VectorXd ut = u + lambda * d;
      if (ut[static_cast<long>(S.size() - 1)] <= 0.0) continue;
      Eigen::VectorXd rt;
      try {
        rt = S.residual(ut, nullptr);
      } catch (const Error&) {
        continue;
      }
      const double rtn = rt.lpNorm<Eigen::Infinity>();
      if (std::isfinite(rtn) && rtn < rn) {
        u = std::move(ut);
        improved = true;
        break;
      }
    }
    if (!improved) break;
    const double prev = rn;
    r = S.residual(u, &J);
    rn = r.lpNorm<Eigen::Infinity>();
    // Rounding floor reached: further iterations only shuffle the last bits.
    if (rn > 0.25 * prev && rn < 1e-10 * scale) break;
    // Newton far from its quadratic regime: the root is degenerate or absent.
    poor = rn > 0.5 * prev ? poor + 1 : 0;
    if (poor >= 3) break;
  }

  BvpSolution sol;
  sol.residual = rn;
  sol.converged = rn <= 1e-9 * scale;
  const double ell = u[static_cast<long>(S.size() - 1)];
  const double h = ell / static_cast<double>(S.M);
  std::vector<GeodesicTrace> pieces;
  pieces.reserve(S.M);
  for (std::size_t k = 0; k < S.M; ++k) {
    const State3 z = S.node(u, k);
    pieces.push_back(integrate_heading(S.profile, {z[0], z[1]}, z[2], h, S.flow));
  }
  sol.trace = concatenate(pieces);
  sol.length = ell;
  sol.initial_heading = u[0];
  return sol;
}

}  // namespace

namespace {

struct ShortenedGuess {
  std::vector<CoverPoint> vertices;
  std::vector<double> cum;  // cumulative edge lengths
  double length = 0.0;
};

ShortenedGuess shortened_guess(const MetricProfile& profile, CoverPoint P, CoverPoint Q,
                               const std::vector<CoverPoint>& guess, const BvpOptions& opts) {
  const double chord = std::hypot(Q.X - P.X, Q.Y - P.Y);
  if (chord == 0.0) throw Error(ErrorKind::InvalidArgument, "solve_cover_geodesic: coincident endpoints");
  std::vector<CoverPoint> path;
  path.push_back(P);
  for (const auto& g : guess) {
    if (std::hypot(g.X - path.back().X, g.Y - path.back().Y) > 0.0) path.push_back(g);
  }
  if (std::hypot(Q.X - path.back().X, Q.Y - path.back().Y) > 0.0) path.push_back(Q);
  Polygon rough{path, false, {}};
  const double approx = std::max(polygon_length(profile, rough), 1e-3);
  const auto nseg = static_cast<std::size_t>(std::max(8.0, std::ceil(approx * opts.vertices_per_unit)));
  Polygon poly{resample(path, nseg), false, {}};
  ShortenResult sh = shorten(profile, poly, opts.shorten);
  ShortenedGuess g;
  g.vertices = std::move(sh.polygon.vertices);
  g.cum.assign(g.vertices.size(), 0.0);
  for (std::size_t i = 1; i < g.vertices.size(); ++i) {
    g.cum[i] = g.cum[i - 1] + edge_length(profile, g.vertices[i - 1], g.vertices[i]);
  }
  g.length = g.cum.back();
  return g;
}

BvpSolution polish_polygon(const MetricProfile& profile, CoverPoint P, CoverPoint Q, const ShortenedGuess& g,
                           const BvpOptions& opts) {
  const auto& v = g.vertices;
  const double Lp = g.length;
  const auto M = static_cast<std::size_t>(std::max(1.0, std::ceil(Lp / opts.segment_length)));
  Shooting S{profile, P, Q, M, opts.flow};
  Eigen::VectorXd u(static_cast<long>(S.size()));
  u[0] = polygon_at(profile, v, g.cum, 0.0).second;
  for (std::size_t k = 1; k < M; ++k) {
    const auto [p, th] = polygon_at(profile, v, g.cum, Lp * static_cast<double>(k) / static_cast<double>(M));
    const long b = static_cast<long>(1 + 3 * (k - 1));
    u[b] = p.X;
    u[b + 1] = p.Y;
    // atan2 jumps by 2 pi for westward headings; keep node angles continuous.
    const double prev = u[k == 1 ? 0 : b - 1];
    u[b + 2] = th + 2.0 * std::numbers::pi * std::round((prev - th) / (2.0 * std::numbers::pi));
  }
  u[static_cast<long>(S.size() - 1)] = Lp;
  return newton_polish(S, std::move(u), opts);
}

}  // namespace

BvpSolution solve_cover_geodesic(const MetricProfile& profile, CoverPoint P, CoverPoint Q,
                                 const std::vector<CoverPoint>& guess, const BvpOptions& opts) {
  return polish_polygon(profile, P, Q, shortened_guess(profile, P, Q, guess, opts), opts);
}

BvpSolution polish_cover_geodesic(const MetricProfile& profile, CoverPoint P, CoverPoint Q,
                                  const GeodesicTrace& guess, const BvpOptions& opts) {
  if (guess.empty() || !(guess.length() > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "polish_cover_geodesic: empty guess");
  }
  const double L = guess.length();
  const auto M = static_cast<std::size_t>(std::max(1.0, std::ceil(L / opts.segment_length)));
  Shooting S{profile, P, Q, M, opts.flow};
  Eigen::VectorXd u(static_cast<long>(S.size()));
  u[0] = guess.samples.front().theta;
  for (std::size_t k = 1; k < M; ++k) {
    const TraceSample z = trace_at(profile, guess, L * static_cast<double>(k) / static_cast<double>(M), opts.flow);
    const long b = static_cast<long>(1 + 3 * (k - 1));
    u[b] = z.X;
    u[b + 1] = z.Y;
    u[b + 2] = z.theta;
  }
  u[static_cast<long>(S.size() - 1)] = L;
  return newton_polish(S, std::move(u), opts);
}

BvpSolution shortest_cover_geodesic(const MetricProfile& profile, CoverPoint P, CoverPoint Q,
                                    const BvpOptions& opts) {
  std::vector<std::vector<CoverPoint>> guesses{{}};
  const double dX = Q.X - P.X;
  if (!profile.is_flat() && std::abs(dX) >= 1e-9) {
    const double ylo = std::min(P.Y, Q.Y) - 1.0, yhi = std::max(P.Y, Q.Y) + 1.0;
    // Leave and rejoin the latitude within one unit, as minimizers hugging it do.
    const double run = std::copysign(std::min(0.2 * std::abs(dX), 1.0), dX);
    for (double a : profile.local_minima()) {
      for (double k = std::floor(ylo - a); a + k <= yhi; k += 1.0) {
        const double y = a + k;
        if (y >= ylo) guesses.push_back({{P.X + run, y}, {Q.X - run, y}});
      }
    }
  }
  // Shortened polygons rank the candidates; only those near the shortest
  // get the multiple-shooting polish.
  // A shortened polygon only bounds its geodesic from above, so a few
  // iterations suffice for ranking; guesses whose raw polygon is already far
  // longer than the best shortened one are skipped.
  BvpOptions rank = opts;
  rank.shorten.max_iterations = std::min(opts.shorten.max_iterations, 60);
  std::vector<ShortenedGuess> polys;
  double best_short = std::numeric_limits<double>::infinity();
  for (const auto& g : guesses) {
    std::vector<CoverPoint> path{P};
    path.insert(path.end(), g.begin(), g.end());
    path.push_back(Q);
    if (polygon_length(profile, Polygon{resample(path, 64 * path.size()), false, {}}) > best_short + 1.0) continue;
    polys.push_back(shortened_guess(profile, P, Q, g, polys.empty() ? opts : rank));
    best_short = std::min(best_short, polys.back().length);
  }
  std::vector<std::size_t> order(polys.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return polys[a].length < polys[b].length; });
  const double Lmin = polys[order.front()].length;
  const double margin = 0.02 + 1e-4 * Lmin;
  BvpSolution best;
  for (std::size_t i : order) {
    if (polys[i].length > Lmin + margin && best.converged) break;
    BvpSolution s = polish_polygon(profile, P, Q, polys[i], opts);
    if (s.converged && (!best.converged || s.length < best.length - 1e-12)) best = std::move(s);
    else if (!best.converged && best.trace.empty()) best = std::move(s);
  }
  return best;
}

}  // namespace geoblock
