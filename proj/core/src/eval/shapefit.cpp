// Copyright 2026 The disco Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "disco/eval/shapefit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include <Eigen/Dense>

namespace disco::eval {

void PcaShapeModel::validate() const {
  if (mean_shape.empty()) raise(Errc::ConfigError, "empty mean shape");
  if (basis.size() != coeff_bounds.size())
    raise(Errc::ShapeError, "basis/bounds size mismatch");
  for (const auto& component : basis)
    if (component.size() != mean_shape.size())
      raise(Errc::ShapeError, "basis component size mismatch");
  for (double bound : coeff_bounds)
    if (!(bound >= 0)) raise(Errc::ConfigError, "negative coefficient bound");
  for (std::size_t a = 0; a < basis.size(); ++a) {
    for (std::size_t b = a; b < basis.size(); ++b) {
      double dot = 0;
      for (std::size_t k = 0; k < mean_shape.size(); ++k)
        dot += basis[a][k].dot(basis[b][k]);
      const double expected = a == b ? 1.0 : 0.0;
      if (std::abs(dot - expected) > 1e-9)
        raise(Errc::ConfigError, "basis components are not orthonormal");
    }
  }
}

std::vector<Eigen::Vector3d> PcaShapeModel::shape(
    const Eigen::VectorXd& coefficients) const {
  if (coefficients.size() != static_cast<Eigen::Index>(basis.size()))
    raise(Errc::ShapeError, "coefficient count does not match basis");
  std::vector<Eigen::Vector3d> out = mean_shape;
  for (std::size_t b = 0; b < basis.size(); ++b)
    for (std::size_t k = 0; k < out.size(); ++k)
      out[k] += coefficients(static_cast<Eigen::Index>(b)) * basis[b][k];
  return out;
}

PcaShapeModel build_pca_model(
    const std::vector<std::vector<Eigen::Vector3d>>& shapes, int components) {
  if (shapes.size() < 2)
    raise(Errc::ConfigError, "need at least 2 shapes for a PCA model");
  const std::size_t k = shapes.front().size();
  if (k == 0) raise(Errc::ShapeError, "empty shape");
  for (const auto& s : shapes)
    if (s.size() != k) raise(Errc::ShapeError, "inconsistent keypoint counts");
  const Eigen::Index dim = static_cast<Eigen::Index>(3 * k);
  if (components < 1 || components > dim)
    raise(Errc::ConfigError, "bad component count");

  Eigen::MatrixXd data(static_cast<Eigen::Index>(shapes.size()), dim);
  for (std::size_t i = 0; i < shapes.size(); ++i)
    for (std::size_t j = 0; j < k; ++j)
      data.block<1, 3>(static_cast<Eigen::Index>(i),
                       static_cast<Eigen::Index>(3 * j)) =
          shapes[i][j].transpose();

  const Eigen::RowVectorXd mean = data.colwise().mean();
  const Eigen::MatrixXd centered = data.rowwise() - mean;
  const Eigen::MatrixXd cov =
      centered.transpose() * centered / static_cast<double>(shapes.size());

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success)
    raise(Errc::DegenerateGeometry, "PCA eigensolver failed");

  PcaShapeModel model;
  model.mean_shape.resize(k);
  for (std::size_t j = 0; j < k; ++j)
    model.mean_shape[j] = mean.segment<3>(static_cast<Eigen::Index>(3 * j));

  // Eigenvalues come back ascending; take the trailing `components`.
  for (int b = 0; b < components; ++b) {
    const Eigen::Index col = dim - 1 - b;
    const Eigen::VectorXd v = solver.eigenvectors().col(col);
    std::vector<Eigen::Vector3d> component(k);
    for (std::size_t j = 0; j < k; ++j)
      component[j] = v.segment<3>(static_cast<Eigen::Index>(3 * j));
    model.basis.push_back(std::move(component));
    const double variance = std::max(solver.eigenvalues()(col), 0.0);
    model.coeff_bounds.push_back(3.0 * std::sqrt(variance));
  }
  return model;
}

void FitConfig::validate() const {
  if (azimuth_steps < 1 || elevation_steps < 1 || distance_steps < 1)
    raise(Errc::ConfigError, "grid steps must be positive");
  if (!(distance_min > 0) || !(distance_max >= distance_min))
    raise(Errc::ConfigError, "bad distance range");
  if (!(elevation_max >= 0)) raise(Errc::ConfigError, "bad elevation range");
  if (refine_candidates < 1 || max_iterations < 1)
    raise(Errc::ConfigError, "bad refinement settings");
  if (!(lambda0 > 0) || !(tolerance > 0))
    raise(Errc::ConfigError, "bad damping settings");
}

namespace {

struct FitProblem {
  const PcaShapeModel* model;
  skelgeom::Camera camera;  // intrinsics carrier; orbit fields overwritten
  std::vector<int> visible;
  const std::vector<Eigen::Vector2d>* landmarks;

  int param_count() const {
    return 3 + static_cast<int>(model->basis.size());
  }

  // Residuals: (projected - observed) per visible landmark, x then y.
  // Returns false when any visible keypoint fails to project.
  bool residuals(const Eigen::VectorXd& theta, Eigen::VectorXd& r) const {
    skelgeom::Camera cam = camera;
    cam.azimuth = theta(0);
    cam.elevation = theta(1);
    cam.distance = theta(2);
    const std::vector<Eigen::Vector3d> points =
        model->shape(theta.tail(theta.size() - 3));
    r.resize(static_cast<Eigen::Index>(2 * visible.size()));
    for (std::size_t j = 0; j < visible.size(); ++j) {
      skelgeom::Projection proj;
      if (!try_project(points[static_cast<std::size_t>(visible[j])], cam, proj))
        return false;
      const Eigen::Vector2d& lm = (*landmarks)[static_cast<std::size_t>(visible[j])];
      r(static_cast<Eigen::Index>(2 * j)) = proj.pixel.x() - lm.x();
      r(static_cast<Eigen::Index>(2 * j + 1)) = proj.pixel.y() - lm.y();
    }
    return true;
  }

  double objective(const Eigen::VectorXd& theta) const {
    Eigen::VectorXd r;
    if (!residuals(theta, r)) return std::numeric_limits<double>::infinity();
    return r.squaredNorm();
  }
};

void clamp_params(Eigen::VectorXd& theta, const PcaShapeModel& model) {
  theta(0) = skelgeom::wrap_angle(theta(0));
  theta(1) = std::clamp(theta(1), -0.35, 1.40);  // about [-20 deg, 80 deg]
  theta(2) = std::max(theta(2), 1e-3);
  for (std::size_t b = 0; b < model.coeff_bounds.size(); ++b) {
    const double bound = model.coeff_bounds[b];
    double& c = theta(static_cast<Eigen::Index>(3 + b));
    c = std::clamp(c, -bound, bound);
  }
}

struct Refined {
  Eigen::VectorXd theta;
  double objective;
  std::vector<double> history;
};

// Levenberg-damped Gauss-Newton with a finite-difference Jacobian. Steps are
// only accepted when they reduce the objective, so the history in the result
// is strictly decreasing.
std::optional<Refined> refine(const FitProblem& problem,
                              const PcaShapeModel& model,
                              Eigen::VectorXd theta, const FitConfig& config) {
  double obj = problem.objective(theta);
  if (!std::isfinite(obj)) return std::nullopt;

  const int np = problem.param_count();
  double lambda = config.lambda0;
  Refined out;
  out.history.push_back(obj);

  Eigen::VectorXd r;
  for (int iter = 0; iter < config.max_iterations; ++iter) {
    if (!problem.residuals(theta, r)) break;
    Eigen::MatrixXd jac(r.size(), np);
    Eigen::VectorXd r_plus, r_minus;
    for (int j = 0; j < np; ++j) {
      const double h = 1e-6 * std::max(1.0, std::abs(theta(j)));
      Eigen::VectorXd t = theta;
      t(j) = theta(j) + h;
      const bool ok_plus = problem.residuals(t, r_plus);
      t(j) = theta(j) - h;
      const bool ok_minus = problem.residuals(t, r_minus);
      if (ok_plus && ok_minus) {
        jac.col(j) = (r_plus - r_minus) / (2 * h);
      } else if (ok_plus) {
        jac.col(j) = (r_plus - r) / h;
      } else if (ok_minus) {
        jac.col(j) = (r - r_minus) / h;
      } else {
        jac.col(j).setZero();
      }
    }

    const Eigen::MatrixXd hessian = jac.transpose() * jac;
    const Eigen::VectorXd gradient = jac.transpose() * r;

    bool accepted = false;
    for (int attempt = 0; attempt < 12; ++attempt) {
      Eigen::MatrixXd damped = hessian;
      for (int j = 0; j < np; ++j)
        damped(j, j) += lambda * std::max(hessian(j, j), 1e-12);
      const Eigen::VectorXd delta = damped.ldlt().solve(-gradient);
      Eigen::VectorXd candidate = theta + delta;
      clamp_params(candidate, model);
      const double cand_obj = problem.objective(candidate);
      if (std::isfinite(cand_obj) && cand_obj < obj) {
        const double improvement = obj - cand_obj;
        theta = candidate;
        obj = cand_obj;
        out.history.push_back(obj);
        lambda = std::max(lambda / 3.0, 1e-12);
        accepted = true;
        if (improvement <= config.tolerance * std::max(obj, 1e-30))
          iter = config.max_iterations;  // converged
        break;
      }
      lambda *= 10.0;
    }
    if (!accepted) break;  // no descent direction left
  }

  out.theta = std::move(theta);
  out.objective = obj;
  return out;
}

}  // namespace

PcaFitResult fit_pca_to_2d(const std::vector<Eigen::Vector2d>& landmarks,
                           const std::vector<std::uint8_t>& occluded,
                           const PcaShapeModel& model,
                           const skelgeom::Camera& intrinsics,
                           const FitConfig& config) {
  model.validate();
  config.validate();
  if (!(intrinsics.focal > 0))
    raise(Errc::ConfigError, "focal length must be positive");
  const std::size_t k = static_cast<std::size_t>(model.keypoint_count());
  if (landmarks.size() != k || occluded.size() != k)
    raise(Errc::ShapeError, "landmark list does not match the shape model");

  FitProblem problem;
  problem.model = &model;
  problem.camera = intrinsics;
  problem.landmarks = &landmarks;
  for (std::size_t i = 0; i < k; ++i)
    if (!occluded[i]) problem.visible.push_back(static_cast<int>(i));
  if (problem.visible.size() < 6)
    raise(Errc::UnderConstrained,
          "fit_pca_to_2d: fewer than 6 visible landmarks");

  const int np = problem.param_count();

  // Coarse pose grid with zero coefficients. Azimuth is the dominant
  // ambiguity for near-symmetric shapes, so keep the best pose per azimuth
  // column and refine the leading few.
  std::vector<std::pair<double, Eigen::VectorXd>> seeds;
  for (int ia = 0; ia < config.azimuth_steps; ++ia) {
    const double az =
        skelgeom::kTwoPi * static_cast<double>(ia) / config.azimuth_steps;
    double best_obj = std::numeric_limits<double>::infinity();
    Eigen::VectorXd best = Eigen::VectorXd::Zero(np);
    for (int ie = 0; ie < config.elevation_steps; ++ie) {
      const double el =
          config.elevation_steps == 1
              ? 0.0
              : config.elevation_max * static_cast<double>(ie) /
                    (config.elevation_steps - 1);
      for (int id = 0; id < config.distance_steps; ++id) {
        const double dist =
            config.distance_steps == 1
                ? config.distance_min
                : config.distance_min +
                      (config.distance_max - config.distance_min) *
                          static_cast<double>(id) / (config.distance_steps - 1);
        Eigen::VectorXd theta = Eigen::VectorXd::Zero(np);
        theta(0) = az;
        theta(1) = el;
        theta(2) = dist;
        const double obj = problem.objective(theta);
        if (obj < best_obj) {
          best_obj = obj;
          best = theta;
        }
      }
    }
    if (std::isfinite(best_obj)) seeds.emplace_back(best_obj, best);
  }
  if (seeds.empty())
    raise(Errc::NoConvergence, "fit_pca_to_2d: no pose projects all landmarks");

  std::sort(seeds.begin(), seeds.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  const int candidates =
      std::min<int>(config.refine_candidates, static_cast<int>(seeds.size()));

  std::optional<Refined> best;
  for (int i = 0; i < candidates; ++i) {
    std::optional<Refined> refined = refine(problem, model, seeds[static_cast<std::size_t>(i)].second, config);
    if (refined && (!best || refined->objective < best->objective))
      best = std::move(refined);
  }
  if (!best || !std::isfinite(best->objective))
    raise(Errc::NoConvergence, "fit_pca_to_2d: refinement diverged");

  PcaFitResult result;
  result.azimuth = skelgeom::wrap_angle(best->theta(0));
  result.elevation = best->theta(1);
  result.distance = best->theta(2);
  result.coefficients = best->theta.tail(np - 3);
  result.fitted3d = model.shape(result.coefficients);
  result.objective = best->objective;
  result.iterations = static_cast<int>(best->history.size()) - 1;
  result.objective_history = std::move(best->history);
  return result;
}

}  // namespace disco::eval
