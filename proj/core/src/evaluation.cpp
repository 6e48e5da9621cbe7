// Copyright 2026 the planereg authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "planereg/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "planereg/errors.hpp"

namespace planereg {

namespace {

constexpr double kNearParallelDeg = 1.0;
constexpr double kProjectionEps = 1e-9;

double angle_deg(const Vec3& a, const Vec3& b) {
  return rad_to_deg(std::atan2(a.cross(b).norm(), a.dot(b)));
}

/// Angle between a predicted direction and the truth direction after
/// projecting the prediction onto the truth plane.  Returns false when the
/// projection degenerates (prediction parallel to the truth normal).
bool projected_angle(const Vec3& pred_dir, const Vec3& truth_dir,
                     const Vec3& truth_normal, double* out_deg) {
  const Vec3 proj = pred_dir - truth_normal * pred_dir.dot(truth_normal);
  const double len = proj.norm();
  if (len < kProjectionEps) return false;
  *out_deg = angle_deg(proj * (1.0 / len), truth_dir);
  return true;
}

}  // namespace

ScoreReport score(const PlaneTriplet& pred, const PlaneTriplet& truth) {
  if (pred.region != truth.region) {
    throw DataError("score: region mismatch between prediction and truth");
  }
  ScoreReport report;
  report.region = truth.region;
  for (int j = 0; j < kNumPlanes; ++j) {
    const Plane& p = pred.plane(j);
    const Plane& t = truth.plane(j);
    report.errors.d_mm[j] = std::abs((p.center() - t.center()).dot(t.e_w()));
    report.errors.eps_n_deg[j] = angle_deg(p.e_w(), t.e_w());

    double a_u = 0.0, a_v = 0.0;
    const bool ok_u = projected_angle(p.e_u(), t.e_u(), t.e_w(), &a_u);
    const bool ok_v = projected_angle(p.e_v(), t.e_v(), t.e_w(), &a_v);
    report.errors.projection_ok[j] = ok_u && ok_v;
    if (ok_u && ok_v) {
      report.errors.eps_i_deg[j] = 0.5 * (a_u + a_v);
    } else if (ok_u || ok_v) {
      report.errors.eps_i_deg[j] = ok_u ? a_u : a_v;
    } else {
      report.errors.eps_i_deg[j] = 90.0;  // no in-plane information at all
    }
  }
  report.score = 0.2 * report.errors.mean_d() + 0.6 * report.errors.mean_eps_n() +
                 0.2 * report.errors.mean_eps_i();
  return report;
}

CouplingMode coupling_mode(BodyRegion region) {
  return region == BodyRegion::kCalcaneus ? CouplingMode::kAxialSagittalOnly
                                          : CouplingMode::kAllOrthogonal;
}

namespace {

/// Plane with the given center and normal whose e_u lies along the
/// intersection line with the reference plane (sign kept nearest old_e_u),
/// which is exactly "intersection angle zero in plane coordinates".
Plane coupled_plane(const Vec3& center, const Vec3& normal, const Vec3& ref_normal,
                    const Vec3& old_e_u) {
  Vec3 line = ref_normal.cross(normal);
  line = line * (1.0 / line.norm());
  if (line.dot(old_e_u) < 0.0) line = line * -1.0;
  return Plane(center, line, normal.cross(line));
}

Vec3 project_off(const Vec3& v, const Vec3& axis) {
  const Vec3 p = v - axis * v.dot(axis);
  return p * (1.0 / p.norm());
}

}  // namespace

CoupleResult couple_planes(const PlaneTriplet& pred, CouplingMode mode) {
  const Plane& axial = pred.plane(0);
  const Plane& coronal = pred.plane(1);
  const Plane& sagittal = pred.plane(2);
  const Vec3 n_ax = axial.e_w();

  const double ax_cor = angle_deg(n_ax, coronal.e_w());
  const double ax_sag = angle_deg(n_ax, sagittal.e_w());
  auto near_parallel = [](double deg) {
    return deg < kNearParallelDeg || deg > 180.0 - kNearParallelDeg;
  };
  if (near_parallel(ax_cor) || near_parallel(ax_sag)) {
    return {pred, false};
  }

  CoupleResult result{pred, true};

  Vec3 n_cor = coronal.e_w();
  if (mode == CouplingMode::kAllOrthogonal) {
    n_cor = project_off(n_cor, n_ax);
  }
  result.planes.plane(1) = coupled_plane(coronal.center(), n_cor, n_ax,
                                         coronal.e_u());

  Vec3 n_sag;
  if (mode == CouplingMode::kAllOrthogonal) {
    n_sag = n_ax.cross(result.planes.plane(1).e_w());
    n_sag = n_sag * (1.0 / n_sag.norm());
    if (n_sag.dot(sagittal.e_w()) < 0.0) n_sag = n_sag * -1.0;
  } else {
    n_sag = project_off(sagittal.e_w(), n_ax);
  }
  result.planes.plane(2) = coupled_plane(sagittal.center(), n_sag, n_ax,
                                         sagittal.e_u());
  return result;
}

double median(std::vector<double> values) {
  if (values.empty()) throw DataError("median of empty set");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2]
                    : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

AggregateSummary aggregate(const std::vector<ScoreReport>& reports) {
  if (reports.empty()) throw DataError("aggregate: no reports");
  std::map<int, std::vector<const ScoreReport*>> by_fold;
  for (const auto& r : reports) by_fold[r.fold].push_back(&r);

  AggregateSummary summary;
  for (const auto& [fold, group] : by_fold) {
    FoldSummary fs;
    fs.fold = fold;
    fs.n_volumes = static_cast<int>(group.size());
    std::vector<double> d, en, ei, sc;
    for (const ScoreReport* r : group) {
      d.push_back(r->errors.mean_d());
      en.push_back(r->errors.mean_eps_n());
      ei.push_back(r->errors.mean_eps_i());
      sc.push_back(r->score);
    }
    fs.median_d = median(d);
    fs.median_eps_n = median(en);
    fs.median_eps_i = median(ei);
    fs.median_score = median(sc);
    summary.folds.push_back(fs);
  }

  auto mean_std = [&](auto pick, double* mean, double* stddev) {
    double m = 0.0;
    for (const auto& f : summary.folds) m += pick(f);
    m /= summary.folds.size();
    double ss = 0.0;
    for (const auto& f : summary.folds) {
      const double dlt = pick(f) - m;
      ss += dlt * dlt;
    }
    *mean = m;
    *stddev = summary.folds.size() > 1
                  ? std::sqrt(ss / (summary.folds.size() - 1))
                  : 0.0;
  };
  mean_std([](const FoldSummary& f) { return f.median_d; }, &summary.mean_d,
           &summary.std_d);
  mean_std([](const FoldSummary& f) { return f.median_eps_n; }, &summary.mean_eps_n,
           &summary.std_eps_n);
  mean_std([](const FoldSummary& f) { return f.median_eps_i; }, &summary.mean_eps_i,
           &summary.std_eps_i);
  mean_std([](const FoldSummary& f) { return f.median_score; }, &summary.mean_score,
           &summary.std_score);
  return summary;
}

}  // namespace planereg
