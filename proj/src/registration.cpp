#include "teleop/registration.hpp"

#include "teleop/errors.hpp"
#include "teleop/rng.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

namespace teleop::registration {

namespace {

constexpr double kSigma2Floor = 1e-10;

void check_spread(const PointCloud& cloud, const char* which) {
  if (cloud.size() < 3) throw DegenerateGeometry(std::string(which) + " cloud needs at least 3 points");
  const Vec3 c = cloud.centroid();
  Mat3 cov = Mat3::Zero();
  for (const auto& p : cloud) cov += (p - c) * (p - c).transpose();
  cov /= static_cast<double>(cloud.size());
  const Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
  const Vec3 ev = eig.eigenvalues();  // ascending
  if (!(ev[2] > 1e-18) || !(ev[1] > 1e-10 * ev[2]))
    throw DegenerateGeometry(std::string(which) + " cloud is collinear or coincident");
}

}  // namespace

void CpdParams::validate() const {
  if (!(outlier_weight >= 0.0 && outlier_weight < 1.0)) throw InvalidArgument("outlier_weight must be in [0, 1)");
  if (max_iterations < 1) throw InvalidArgument("max_iterations must be at least 1");
  if (!(tolerance > 0.0)) throw InvalidArgument("tolerance must be positive");
  if (!(init_sigma2 >= 0.0) || !std::isfinite(init_sigma2)) throw InvalidArgument("init_sigma2 must be >= 0");
  if (max_reference_points < 3) throw InvalidArgument("max_reference_points must be at least 3");
}

Pose mask_pose(const PointCloud& mask_points, const scene::CameraModel& camera, double z_offset) {
  return Pose::from_translation(mask_points.centroid() + z_offset * camera.z_axis());
}

Mat3 detail::best_rotation(const Mat3& a) {
  const Eigen::JacobiSVD<Mat3> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 c = Mat3::Identity();
  c(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  return svd.matrixU() * c * svd.matrixV().transpose();
}

namespace {

class CpdSolver {
 public:
  CpdSolver(const PointCloud& reference, const PointCloud& observed, double w)
      : y_(reference.points()), x_(observed.points()), w_(w),
        m_(static_cast<int>(y_.size())), n_(static_cast<int>(x_.size())),
        p_(static_cast<std::size_t>(m_) * n_), log_a_(p_.size()) {}

  double initial_sigma2(const Mat3& r, const Vec3& t) const {
    double sum = 0.0;
    for (const auto& y : y_) {
      const Vec3 ty = r * y + t;
      for (const auto& x : x_) sum += (x - ty).squaredNorm();
    }
    return sum / (3.0 * m_ * n_);
  }

  // Fills the posterior matrix for (r, t, sigma2) and returns the negative log-likelihood.
  double expectation(const Mat3& r, const Vec3& t, double sigma2) {
    const double log_c = w_ > 0.0 ? 1.5 * std::log(2.0 * std::numbers::pi * sigma2) + std::log(w_ / (1.0 - w_)) +
                                        std::log(static_cast<double>(m_) / n_)
                                  : -std::numeric_limits<double>::infinity();
    std::vector<Vec3> ty(m_);
    for (int j = 0; j < m_; ++j) ty[j] = r * y_[j] + t;
    const double inv = -0.5 / sigma2;
    double nll = 0.0;
    for (int i = 0; i < n_; ++i) {
      double amax = log_c;
      for (int j = 0; j < m_; ++j) {
        const double a = (x_[i] - ty[j]).squaredNorm() * inv;
        log_a_[idx(j, i)] = a;
        amax = std::max(amax, a);
      }
      double sum = std::exp(log_c - amax);
      for (int j = 0; j < m_; ++j) {
        const double e = std::exp(log_a_[idx(j, i)] - amax);
        p_[idx(j, i)] = e;
        sum += e;
      }
      const double log_den = amax + std::log(sum);
      for (int j = 0; j < m_; ++j) p_[idx(j, i)] /= sum;
      nll -= std::log((1.0 - w_) / m_) - 1.5 * std::log(2.0 * std::numbers::pi * sigma2) + log_den;
    }
    return nll;
  }

  // Closed-form maximisation over (R, t, sigma2) for the current posterior.
  bool maximization(Mat3& r, Vec3& t, double& sigma2) const {
    std::vector<double> py(m_, 0.0);  // P 1
    std::vector<double> px(n_, 0.0);  // P^T 1
    for (int j = 0; j < m_; ++j) {
      for (int i = 0; i < n_; ++i) {
        const double p = p_[idx(j, i)];
        py[j] += p;
        px[i] += p;
      }
    }
    const double np = std::accumulate(px.begin(), px.end(), 0.0);
    if (!(np > 1e-300)) return false;
    Vec3 mu_x = Vec3::Zero();
    Vec3 mu_y = Vec3::Zero();
    for (int i = 0; i < n_; ++i) mu_x += px[i] * x_[i];
    for (int j = 0; j < m_; ++j) mu_y += py[j] * y_[j];
    mu_x /= np;
    mu_y /= np;

    Mat3 a = Mat3::Zero();
    for (int j = 0; j < m_; ++j) {
      const Vec3 yh = y_[j] - mu_y;
      Vec3 acc = Vec3::Zero();
      for (int i = 0; i < n_; ++i) acc += p_[idx(j, i)] * (x_[i] - mu_x);
      a += acc * yh.transpose();
    }
    r = detail::best_rotation(a);
    t = mu_x - r * mu_y;

    double xx = 0.0;
    double yy = 0.0;
    for (int i = 0; i < n_; ++i) xx += px[i] * (x_[i] - mu_x).squaredNorm();
    for (int j = 0; j < m_; ++j) yy += py[j] * (y_[j] - mu_y).squaredNorm();
    const double sse = xx - 2.0 * (a.transpose() * r).trace() + yy;
    sigma2 = std::max(sse, 0.0) / (3.0 * np);
    return true;
  }

 private:
  std::size_t idx(int j, int i) const { return static_cast<std::size_t>(j) * n_ + i; }

  const std::vector<Vec3>& y_;
  const std::vector<Vec3>& x_;
  double w_;
  int m_;
  int n_;
  std::vector<double> p_;
  std::vector<double> log_a_;
};

}  // namespace

RegistrationResult cpd_rigid(const PointCloud& reference, const PointCloud& observed, const Pose& init,
                             const CpdParams& params) {
  params.validate();
  check_spread(reference, "reference");
  check_spread(observed, "observed");

  Mat3 r = init.rotation_matrix();
  Vec3 t = init.translation();
  CpdSolver solver(reference, observed, params.outlier_weight);
  double sigma2 = params.init_sigma2 > 0.0 ? params.init_sigma2 : solver.initial_sigma2(r, t);

  RegistrationResult result;
  if (!(sigma2 > kSigma2Floor)) {
    // Already aligned to within the floor; nothing to estimate.
    result.pose = init;
    result.final_sigma2 = sigma2;
    result.converged = true;
    return result;
  }

  double nll = solver.expectation(r, t, sigma2);
  result.objective_history.push_back(nll);
  for (int it = 1; it <= params.max_iterations; ++it) {
    if (!solver.maximization(r, t, sigma2)) break;
    result.iterations_used = it;
    if (sigma2 <= kSigma2Floor) {
      sigma2 = kSigma2Floor;
      result.converged = true;
      break;
    }
    const double next = solver.expectation(r, t, sigma2);
    result.objective_history.push_back(next);
    const double change = std::abs(nll - next);
    nll = next;
    if (change <= params.tolerance * std::max(1.0, std::abs(nll))) {
      result.converged = true;
      break;
    }
  }
  result.pose = Pose(Quat(r), t);
  result.final_sigma2 = sigma2;
  return result;
}

PointCloud downsample(const PointCloud& cloud, int max_points, std::uint64_t seed) {
  if (max_points < 1) throw InvalidArgument("max_points must be positive");
  if (cloud.size() <= static_cast<std::size_t>(max_points)) return cloud;
  Rng rng(seed, "downsample");
  std::vector<std::size_t> idx(cloud.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (int i = 0; i < max_points; ++i) {
    const std::size_t j = i + rng.below(idx.size() - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(max_points);
  std::sort(idx.begin(), idx.end());
  std::vector<Vec3> pts;
  pts.reserve(idx.size());
  for (auto i : idx) pts.push_back(cloud[i]);
  return PointCloud(std::move(pts));
}

RegistrationResult mesh_pose(const scene::ObjectModel& model, const PointCloud& mask_points,
                             const scene::CameraModel& camera, const CpdParams& params) {
  params.validate();
  const PointCloud reference = downsample(model.reference_points, params.max_reference_points, params.seed);
  return cpd_rigid(reference, mask_points, mask_pose(mask_points, camera, 0.0), params);
}

}  // namespace teleop::registration
