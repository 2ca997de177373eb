#include "masim/covariance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace masim {

namespace {

constexpr double kPosTol = 1e-12;

std::vector<double> axis_points(double lo, double hi, double step, const char* name) {
  if (!(step > 0.0)) throw ValidationError(std::string(name) + " step must be > 0");
  if (!(lo <= hi) || lo < -90.0 || hi > 90.0) {
    throw ValidationError(std::string(name) + " bounds must satisfy -90 <= min <= max <= 90");
  }
  const double span = hi - lo;
  const auto n = static_cast<long>(std::llround(span / step));
  if (std::abs(static_cast<double>(n) * step - span) > 1e-9 * std::max(1.0, span)) {
    throw ValidationError(std::string(name) + " step does not divide the angular range");
  }
  std::vector<double> out(static_cast<std::size_t>(n + 1));
  for (long k = 0; k <= n; ++k) out[static_cast<std::size_t>(k)] = lo + static_cast<double>(k) * step;
  return out;
}

bool less_xy(const Position& a, const Position& b) {
  return a.x_m < b.x_m || (a.x_m == b.x_m && a.y_m < b.y_m);
}

// Orthogonal-projection helper G = F (F^H F)^{-1}, so that P = I - G F^H.
Eigen::MatrixXcd pseudo_left(const Eigen::MatrixXcd& f) {
  const Eigen::MatrixXcd gram = f.adjoint() * f;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr(gram);
  qr.setThreshold(1e-10);
  if (qr.rank() < gram.cols()) {
    throw DegenerateGeometryError("steering vectors of the given directions are linearly dependent");
  }
  return f * qr.solve(Eigen::MatrixXcd::Identity(gram.rows(), gram.cols()));
}

}  // namespace

void AngleGrid::validate() const {
  (void)elevations();
  (void)azimuths();
}

std::vector<double> AngleGrid::elevations() const {
  return axis_points(elevation_min_deg, elevation_max_deg, elevation_step_deg, "elevation");
}

std::vector<double> AngleGrid::azimuths() const {
  return axis_points(azimuth_min_deg, azimuth_max_deg, azimuth_step_deg, "azimuth");
}

double PasMatrix::max_value() const {
  if (values.empty()) throw ValidationError("empty PAS");
  return *std::max_element(values.begin(), values.end());
}

CVec array_response(double theta_deg, double phi_deg, std::span<const Position> positions,
                    double wavelength) {
  if (!(wavelength > 0.0)) throw ValidationError("wavelength must be positive");
  const double t = deg_to_rad(theta_deg);
  const double p = deg_to_rad(phi_deg);
  const double ux = std::cos(t) * std::sin(p) / wavelength;
  const double uy = std::sin(t) / wavelength;
  CVec f(positions.size());
  for (std::size_t q = 0; q < positions.size(); ++q) {
    f[q] = std::polar(1.0, -2.0 * kPi * (positions[q].x_m * ux + positions[q].y_m * uy));
  }
  return f;
}

SpatialCovariance::SpatialCovariance(std::vector<Position> positions, Eigen::MatrixXcd r,
                                     double wavelength)
    : positions_(std::move(positions)), r_(std::move(r)), wavelength_(wavelength) {
  const std::size_t q = positions_.size();
  if (q == 0) throw ValidationError("covariance needs at least one position");
  if (static_cast<std::size_t>(r_.rows()) != q || static_cast<std::size_t>(r_.cols()) != q) {
    throw ValidationError("covariance size does not match the position count");
  }
  if (!(wavelength_ > 0.0)) throw ValidationError("wavelength must be positive");

  std::vector<std::size_t> perm(q);
  std::iota(perm.begin(), perm.end(), 0);
  std::stable_sort(perm.begin(), perm.end(),
                   [&](std::size_t a, std::size_t b) { return less_xy(positions_[a], positions_[b]); });
  if (!std::is_sorted(perm.begin(), perm.end())) {
    std::vector<Position> sorted(q);
    Eigen::MatrixXcd rs(q, q);
    for (std::size_t j = 0; j < q; ++j) {
      sorted[j] = positions_[perm[j]];
      for (std::size_t i = 0; i < q; ++i) rs(i, j) = r_(perm[i], perm[j]);
    }
    positions_ = std::move(sorted);
    r_ = std::move(rs);
  }

  // Product-set detection.
  std::vector<double> xs;
  for (const auto& p : positions_) {
    if (xs.empty() || p.x_m - xs.back() > kPosTol) xs.push_back(p.x_m);
  }
  if (q % xs.size() != 0) return;
  const std::size_t ny = q / xs.size();
  std::vector<double> ys(ny);
  for (std::size_t iy = 0; iy < ny; ++iy) ys[iy] = positions_[iy].y_m;
  for (std::size_t ix = 0; ix < xs.size(); ++ix) {
    for (std::size_t iy = 0; iy < ny; ++iy) {
      const auto& p = positions_[ix * ny + iy];
      if (std::abs(p.x_m - xs[ix]) > kPosTol || std::abs(p.y_m - ys[iy]) > kPosTol) return;
    }
  }
  for (std::size_t iy = 1; iy < ny; ++iy) {
    if (!(ys[iy] - ys[iy - 1] > kPosTol)) return;
  }
  xs_ = std::move(xs);
  ys_ = std::move(ys);
}

SpatialCovariance SpatialCovariance::from_records(std::span<const IQRecord> records,
                                                  double wavelength) {
  const std::size_t q = records.size();
  if (q == 0) throw ValidationError("no records for covariance");
  const std::size_t n = records.front().samples.size();
  for (std::size_t i = 0; i < q; ++i) {
    if (records[i].samples.size() != n) {
      throw ValidationError("record " + std::to_string(i) + " length differs from record 0");
    }
  }
  std::vector<std::size_t> perm(q);
  std::iota(perm.begin(), perm.end(), 0);
  std::stable_sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) {
    return less_xy(records[a].position, records[b].position);
  });
  std::vector<Position> positions(q);
  for (std::size_t i = 0; i < q; ++i) positions[i] = records[perm[i]].position;

  Eigen::MatrixXcd r = Eigen::MatrixXcd::Zero(q, q);
  constexpr std::size_t kBlock = 256;
  Eigen::MatrixXcd y(q, kBlock);
  for (std::size_t n0 = 0; n0 < n; n0 += kBlock) {
    const std::size_t b = std::min(kBlock, n - n0);
    if (b != kBlock) y.resize(q, b);
    for (std::size_t j = 0; j < b; ++j) {
      for (std::size_t i = 0; i < q; ++i) y(i, j) = records[perm[i]].samples[n0 + j];
    }
    r.selfadjointView<Eigen::Lower>().rankUpdate(y);
  }
  Eigen::MatrixXcd full = r.selfadjointView<Eigen::Lower>();
  return SpatialCovariance(std::move(positions), std::move(full), wavelength);
}

CVec SpatialCovariance::steering(Direction d) const {
  return array_response(d.elevation_deg, d.azimuth_deg, positions_, wavelength_);
}

Eigen::MatrixXcd SpatialCovariance::steering_matrix(std::span<const Direction> dirs) const {
  Eigen::MatrixXcd f(size(), dirs.size());
  for (std::size_t k = 0; k < dirs.size(); ++k) {
    const CVec v = steering(dirs[k]);
    f.col(static_cast<Eigen::Index>(k)) = Eigen::Map<const Eigen::VectorXcd>(v.data(), v.size());
  }
  return f;
}

PasMatrix SpatialCovariance::pas(const AngleGrid& grid) const {
  return is_lattice() ? pas_separable(grid) : pas_generic(grid);
}

PasMatrix SpatialCovariance::pas_generic(const AngleGrid& grid) const {
  PasMatrix out;
  out.grid = grid;
  out.elevations_deg = grid.elevations();
  out.azimuths_deg = grid.azimuths();
  const std::size_t ne = out.num_elevations();
  const std::size_t na = out.num_azimuths();
  out.values.assign(ne * na, 0.0);

  std::vector<Direction> dirs;
  dirs.reserve(na);
  for (std::size_t e = 0; e < ne; ++e) {
    dirs.clear();
    for (double az : out.azimuths_deg) dirs.push_back({out.elevations_deg[e], az});
    const Eigen::MatrixXcd f = steering_matrix(dirs);
    const Eigen::MatrixXcd rf = r_ * f;
    for (std::size_t a = 0; a < na; ++a) {
      const auto k = static_cast<Eigen::Index>(a);
      out.values[e * na + a] = std::max(0.0, f.col(k).dot(rf.col(k)).real());
    }
  }
  return out;
}

PasMatrix SpatialCovariance::pas_separable(const AngleGrid& grid) const {
  PasMatrix out;
  out.grid = grid;
  out.elevations_deg = grid.elevations();
  out.azimuths_deg = grid.azimuths();
  const std::size_t ne = out.num_elevations();
  const std::size_t na = out.num_azimuths();
  out.values.assign(ne * na, 0.0);

  const auto nx = static_cast<Eigen::Index>(xs_.size());
  const auto ny = static_cast<Eigen::Index>(ys_.size());
  const auto q = static_cast<Eigen::Index>(size());
  // R viewed as (ny) x (nx * Q): entry (iy, ix + nx * p') = R(ix * ny + iy, p').
  const Eigen::Map<const Eigen::MatrixXcd> rm(r_.data(), ny, nx * q);

  std::vector<double> sin_phi(na);
  for (std::size_t a = 0; a < na; ++a) sin_phi[a] = std::sin(deg_to_rad(out.azimuths_deg[a]));

  constexpr Eigen::Index kChunk = 8;
  using RowMat = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::MatrixXcd ay(ny, kChunk);
  RowMat t;
  Eigen::MatrixXcd b(nx, nx);
  Eigen::MatrixXcd ax(nx, static_cast<Eigen::Index>(na));
  Eigen::MatrixXcd bax;

  for (std::size_t e0 = 0; e0 < ne; e0 += kChunk) {
    const Eigen::Index c_n = std::min<Eigen::Index>(kChunk, static_cast<Eigen::Index>(ne - e0));
    for (Eigen::Index c = 0; c < c_n; ++c) {
      const double uy = std::sin(deg_to_rad(out.elevations_deg[e0 + c])) / wavelength_;
      for (Eigen::Index iy = 0; iy < ny; ++iy) {
        ay(iy, c) = std::polar(1.0, -2.0 * kPi * ys_[iy] * uy);
      }
    }
    t.noalias() = ay.leftCols(c_n).adjoint() * rm;

    for (Eigen::Index c = 0; c < c_n; ++c) {
      // B(ix, ix') = sum_{iy'} T(c, ix + nx (ix' ny + iy')) a_y(iy').
      b.setZero();
      const cplx* trow = t.row(c).data();
      for (Eigen::Index ix2 = 0; ix2 < nx; ++ix2) {
        for (Eigen::Index iy2 = 0; iy2 < ny; ++iy2) {
          const cplx w = ay(iy2, c);
          const cplx* src = trow + nx * (ix2 * ny + iy2);
          for (Eigen::Index ix = 0; ix < nx; ++ix) b(ix, ix2) += src[ix] * w;
        }
      }
      const double cos_t = std::cos(deg_to_rad(out.elevations_deg[e0 + c]));
      for (std::size_t a = 0; a < na; ++a) {
        const double ux = cos_t * sin_phi[a] / wavelength_;
        for (Eigen::Index ix = 0; ix < nx; ++ix) {
          ax(ix, static_cast<Eigen::Index>(a)) = std::polar(1.0, -2.0 * kPi * xs_[ix] * ux);
        }
      }
      bax.noalias() = b * ax;
      double* row = out.values.data() + (e0 + c) * na;
      for (std::size_t a = 0; a < na; ++a) {
        const auto k = static_cast<Eigen::Index>(a);
        row[a] = std::max(0.0, ax.col(k).dot(bax.col(k)).real());
      }
    }
  }
  return out;
}

SpatialCovariance SpatialCovariance::deflated(std::span<const Direction> dirs) const {
  if (dirs.empty()) return *this;
  const Eigen::MatrixXcd f = steering_matrix(dirs);
  const Eigen::MatrixXcd g = pseudo_left(f);
  const Eigen::MatrixXcd rf = r_ * f;
  const Eigen::MatrixXcd frf = f.adjoint() * rf;
  // P R P with P = I - G F^H.
  Eigen::MatrixXcd rp = r_;
  rp.noalias() -= g * rf.adjoint();
  rp.noalias() -= rf * g.adjoint();
  rp.noalias() += g * (frf * g.adjoint());
  return SpatialCovariance(positions_, std::move(rp), wavelength_);
}

std::vector<double> SpatialCovariance::projected_power(
    std::span<const Direction> candidates, std::span<const Direction> project_out) const {
  Eigen::MatrixXcd fc = steering_matrix(candidates);
  if (!project_out.empty()) {
    const Eigen::MatrixXcd fo = steering_matrix(project_out);
    const Eigen::MatrixXcd g = pseudo_left(fo);
    fc -= g * (fo.adjoint() * fc);
  }
  const Eigen::MatrixXcd rf = r_ * fc;
  std::vector<double> out(candidates.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    out[k] = std::max(0.0, fc.col(i).dot(rf.col(i)).real());
  }
  return out;
}

}  // namespace masim
