#include "turnkit/axes.hpp"

#include "turnkit/error.hpp"
#include "turnkit/parallel.hpp"
#include "turnkit/revolve.hpp"

#include <Eigen/Eigenvalues>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <random>

namespace turnkit {
namespace {

bool same_line(const Axis& a, const Axis& b, double scale) {
  if (line_angle(a.direction, b.direction) > 1e-9) return false;
  return (a.canonical().point - b.canonical().point).norm() <= 1e-9 * std::max(1.0, scale);
}

// Shoemake's uniform rotation from three uniforms.
Mat3 random_rotation(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double u1 = unit(rng), u2 = unit(rng), u3 = unit(rng);
  const double a = std::sqrt(1 - u1), b = std::sqrt(u1);
  const Eigen::Quaterniond q(b * std::cos(2 * M_PI * u3), a * std::sin(2 * M_PI * u2),
                             a * std::cos(2 * M_PI * u2), b * std::sin(2 * M_PI * u3));
  return q.normalized().toRotationMatrix();
}

struct GslVector {
  explicit GslVector(std::size_t n) : v(gsl_vector_alloc(n)) {}
  ~GslVector() { gsl_vector_free(v); }
  GslVector(const GslVector&) = delete;
  GslVector& operator=(const GslVector&) = delete;
  gsl_vector* v;
};

struct GslMinimizer {
  explicit GslMinimizer(std::size_t n)
      : m(gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n)) {}
  ~GslMinimizer() { gsl_multimin_fminimizer_free(m); }
  GslMinimizer(const GslMinimizer&) = delete;
  GslMinimizer& operator=(const GslMinimizer&) = delete;
  gsl_multimin_fminimizer* m;
};

// Objective state for the simplex search. Evaluations past the budget
// return a penalty without touching the part.
struct RefineState {
  const VoxelGrid* part;
  double pixel;
  Vec3 d0, e_u, e_v, p0;
  int budget;
  int evaluations = 0;
  double best_gamma = -1.0;
  Axis best_axis;

  Axis axis_at(const double* x) const {
    const Vec3 d = (d0 + x[0] * e_u + x[1] * e_v).normalized();
    return Axis::make(p0 + x[2] * e_u + x[3] * e_v, d);
  }

  double evaluate(const double* x) {
    if (evaluations >= budget) return 1.0;
    ++evaluations;
    const Axis a = axis_at(x);
    const double g = turnability_ratio(*part, a, pixel).gamma;
    if (g > best_gamma) {
      best_gamma = g;
      best_axis = a;
    }
    return -g;
  }
};

double refine_objective(const gsl_vector* x, void* params) {
  auto* s = static_cast<RefineState*>(params);
  const double v[4] = {gsl_vector_get(x, 0), gsl_vector_get(x, 1), gsl_vector_get(x, 2),
                       gsl_vector_get(x, 3)};
  return s->evaluate(v);
}

}  // namespace

std::string_view to_string(AxisProvenance p) {
  switch (p) {
    case AxisProvenance::Principal: return "principal";
    case AxisProvenance::Sampled: return "sampled";
    case AxisProvenance::Refined: return "refined";
    case AxisProvenance::User: return "user";
  }
  return "unknown";
}

std::optional<Axis> PrincipalAxes::unique_axis() const {
  if (isotropic || !degenerate) return std::nullopt;
  const double scale = eigenvalues.cwiseAbs().maxCoeff();
  auto eq = [&](int i, int j) {
    return std::abs(eigenvalues[i] - eigenvalues[j]) <= kEigenTolerance * scale;
  };
  if (eq(1, 2)) return axes[0];
  if (eq(0, 1)) return axes[2];
  return std::nullopt;
}

PrincipalAxes principal_axes(const VoxelGrid& part) {
  const std::vector<Vec3> centers = part.occupied_centers();
  if (centers.empty()) throw Error("principal_axes: part is empty");
  PrincipalAxes out;
  for (const Vec3& c : centers) out.centroid += c;
  out.centroid /= static_cast<double>(centers.size());

  const double cell = part.cell();
  const double dv = cell * cell * cell;
  Mat3 inertia = Mat3::Zero();
  for (const Vec3& c : centers) {
    const Vec3 r = c - out.centroid;
    inertia += r.squaredNorm() * Mat3::Identity() - r * r.transpose();
  }
  // Each cell's own inertia about its center is isotropic.
  inertia += static_cast<double>(centers.size()) * (cell * cell / 6.0) * Mat3::Identity();
  inertia *= dv;

  const Eigen::SelfAdjointEigenSolver<Mat3> solver(inertia);
  out.eigenvalues = solver.eigenvalues();
  for (int i = 0; i < 3; ++i) {
    out.axes[i] = Axis::make(out.centroid, solver.eigenvectors().col(i)).canonical();
    out.axes[i].point = out.centroid;
  }
  const double scale = out.eigenvalues.cwiseAbs().maxCoeff();
  const bool e01 = std::abs(out.eigenvalues[0] - out.eigenvalues[1]) <= kEigenTolerance * scale;
  const bool e12 = std::abs(out.eigenvalues[1] - out.eigenvalues[2]) <= kEigenTolerance * scale;
  out.degenerate = e01 || e12;
  out.isotropic = e01 && e12;
  return out;
}

std::vector<Vec3> sphere_directions(int n, std::uint64_t seed) {
  std::vector<Vec3> dirs;
  if (n < 1) return dirs;
  const double golden = M_PI * (3.0 - std::sqrt(5.0));
  const Mat3 rot = seed == 0 ? Mat3::Identity() : random_rotation(seed);
  dirs.reserve(n);
  for (int i = 0; i < n; ++i) {
    const double z = 1.0 - (i + 0.5) / n;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden * i;
    dirs.push_back(rot * Vec3(r * std::cos(phi), r * std::sin(phi), z));
  }
  return dirs;
}

std::vector<Axis> sample_axes(const VoxelGrid& part, int n_dirs, int n_offsets,
                              std::uint64_t seed) {
  if (n_dirs < 1) throw Error("sample_axes: n_dirs must be at least 1");
  n_offsets = std::max(1, n_offsets);
  const std::vector<Vec3> centers = part.occupied_centers();
  Vec3 centroid = Vec3::Zero();
  for (const Vec3& c : centers) centroid += c;
  if (!centers.empty()) centroid /= static_cast<double>(centers.size());
  const auto bounds = occupied_bounds(part);
  const double scale = bounds.isEmpty() ? 1.0 : bounds.diagonal().norm();

  // Lattice offsets (i, j), nearest the centroid first.
  int m = 0;
  while ((2 * m + 1) * (2 * m + 1) < n_offsets) ++m;
  std::vector<std::pair<int, int>> lattice;
  for (int i = -m; i <= m; ++i)
    for (int j = -m; j <= m; ++j) lattice.emplace_back(i, j);
  std::stable_sort(lattice.begin(), lattice.end(), [](auto a, auto b) {
    return a.first * a.first + a.second * a.second < b.first * b.first + b.second * b.second;
  });
  lattice.resize(n_offsets);

  std::vector<Axis> out;
  for (const Vec3& d : sphere_directions(n_dirs, seed)) {
    const auto [eu, ev] = orthonormal_basis(d);
    double hu = 0, hv = 0;
    if (!bounds.isEmpty()) {
      for (int c = 0; c < 8; ++c) {
        const Vec3 q = bounds.corner(static_cast<Eigen::AlignedBox3d::CornerType>(c)) - centroid;
        hu = std::max(hu, std::abs(q.dot(eu)));
        hv = std::max(hv, std::abs(q.dot(ev)));
      }
    }
    for (const auto& [i, j] : lattice) {
      const Vec3 p = centroid + (i * hu / (m + 1)) * eu + (j * hv / (m + 1)) * ev;
      const Axis a = Axis::make(p, d);
      const bool dup = std::any_of(out.begin(), out.end(), [&](const Axis& b) { return same_line(a, b, scale); });
      if (!dup) out.push_back(a);
    }
  }
  return out;
}

std::vector<AxisCandidate> rank_candidates(std::vector<AxisCandidate> cands,
                                           std::span<const Axis> principal, std::size_t k) {
  if (k < 1) throw Error("rank_candidates: k must be at least 1");
  struct Key {
    double angle;
    double offset;
  };
  std::vector<Key> keys(cands.size(), Key{M_PI, 0.0});
  for (std::size_t i = 0; i < cands.size(); ++i) {
    for (const Axis& p : principal) {
      const double ang = line_angle(cands[i].axis.direction, p.direction);
      const Vec3 w = cands[i].axis.point - p.point;
      const double off = (w - w.dot(p.direction) * p.direction).norm();
      if (ang < keys[i].angle - 1e-12 || (std::abs(ang - keys[i].angle) <= 1e-12 && off < keys[i].offset)) {
        keys[i] = {ang, off};
      }
    }
  }
  std::vector<std::size_t> order(cands.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (std::abs(keys[a].angle - keys[b].angle) > 1e-12) return keys[a].angle < keys[b].angle;
    return keys[a].offset < keys[b].offset;
  });
  std::vector<AxisCandidate> out;
  for (std::size_t i = 0; i < std::min(k, order.size()); ++i) out.push_back(cands[order[i]]);
  return out;
}

void evaluate_candidates(const VoxelGrid& part, std::span<AxisCandidate> cands, double pixel) {
  parallel_for(0, static_cast<std::ptrdiff_t>(cands.size()), [&](std::ptrdiff_t i) {
    cands[i].gamma = turnability_ratio(part, cands[i].axis, pixel).gamma;
  });
}

RefineResult refine_axis(const VoxelGrid& part, const Axis& seed, int budget, double pixel) {
  if (budget < 1) throw Error("refine_axis: budget must be at least 1");
  gsl_set_error_handler_off();

  const std::vector<Vec3> centers = part.occupied_centers();
  if (centers.empty()) throw Error("refine_axis: part is empty");
  Vec3 centroid = Vec3::Zero();
  for (const Vec3& c : centers) centroid += c;
  centroid /= static_cast<double>(centers.size());

  RefineState state{&part, pixel, seed.direction.normalized(), {}, {}, {}, budget, 0, -1.0, seed};
  std::tie(state.e_u, state.e_v) = orthonormal_basis(state.d0);
  // Pin the point to the plane through the centroid normal to the seed.
  const double t = (centroid - seed.point).dot(state.d0);
  state.p0 = seed.point + t * state.d0;

  const double zero[4] = {0, 0, 0, 0};
  state.evaluate(zero);

  if (budget > 1) {
    double radius = 0;
    for (const Vec3& c : centers) radius = std::max(radius, (c - centroid).norm());
    GslVector x(4), step(4);
    gsl_vector_set_zero(x.v);
    gsl_vector_set(step.v, 0, 0.1);
    gsl_vector_set(step.v, 1, 0.1);
    gsl_vector_set(step.v, 2, std::max(2 * pixel, 0.05 * radius));
    gsl_vector_set(step.v, 3, std::max(2 * pixel, 0.05 * radius));
    gsl_multimin_function fn{&refine_objective, 4, &state};
    GslMinimizer nm(4);
    if (gsl_multimin_fminimizer_set(nm.m, &fn, x.v, step.v) == GSL_SUCCESS) {
      while (state.evaluations < budget) {
        if (gsl_multimin_fminimizer_iterate(nm.m) != GSL_SUCCESS) break;
        if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(nm.m), 1e-4) == GSL_SUCCESS) break;
      }
    }
  }
  return {AxisCandidate{state.best_axis, state.best_gamma, AxisProvenance::Refined}, state.evaluations};
}

std::vector<AxisCandidate> search_axes(const VoxelGrid& part, const AxisSearchOptions& options,
                                       std::span<const Axis> user_axes) {
  if (!(options.pixel > 0)) throw Error("search_axes: pixel size must be positive");
  const PrincipalAxes pa = principal_axes(part);
  std::vector<AxisCandidate> pool;
  for (const Axis& a : pa.axes) pool.push_back({a, std::nullopt, AxisProvenance::Principal});
  for (const Axis& a : sample_axes(part, options.n_dirs, options.n_offsets, options.seed)) {
    pool.push_back({a, std::nullopt, AxisProvenance::Sampled});
  }
  std::vector<AxisCandidate> shortlist =
      rank_candidates(std::move(pool), pa.axes, std::max<std::size_t>(1, options.shortlist));
  // Principal axes are always evaluated; user axes bypass the shortlist.
  for (const Axis& a : pa.axes) {
    const bool present = std::any_of(shortlist.begin(), shortlist.end(), [&](const AxisCandidate& c) {
      return c.provenance == AxisProvenance::Principal && c.axis.direction.isApprox(a.direction);
    });
    if (!present) shortlist.push_back({a, std::nullopt, AxisProvenance::Principal});
  }
  for (const Axis& a : user_axes) shortlist.push_back({a, std::nullopt, AxisProvenance::User});
  evaluate_candidates(part, shortlist, options.pixel);

  auto by_gamma = [](const AxisCandidate& a, const AxisCandidate& b) { return *a.gamma > *b.gamma; };
  std::stable_sort(shortlist.begin(), shortlist.end(), by_gamma);

  const std::size_t n_refine = std::min(options.refine_top, shortlist.size());
  std::vector<AxisCandidate> refined(n_refine);
  parallel_for(0, static_cast<std::ptrdiff_t>(n_refine), [&](std::ptrdiff_t i) {
    refined[i] = refine_axis(part, shortlist[i].axis, options.refine_budget, options.pixel).best;
  });
  for (AxisCandidate& r : refined) {
    // Keep the point: it fixes the section lattice the gamma was measured on.
    r.axis.direction = r.axis.canonical().direction;
    shortlist.push_back(r);
  }
  std::stable_sort(shortlist.begin(), shortlist.end(), by_gamma);
  return shortlist;
}

}  // namespace turnkit
