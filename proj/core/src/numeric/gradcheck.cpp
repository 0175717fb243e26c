/*
 * Copyright 2026 The ustack Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "ustack/numeric/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "ustack/errors.hpp"

namespace ustack {

std::vector<double> finite_diff_grad(const std::function<double(std::span<const double>)>& f,
                                     std::span<const double> theta, double h) {
  if (!(h > 0.0)) throw ContractError("finite_diff_grad: h must be positive");
  std::vector<double> point(theta.begin(), theta.end());
  std::vector<double> grad(point.size());
  for (std::size_t i = 0; i < point.size(); ++i) {
    const double saved = point[i];
    point[i] = saved + h;
    const double plus = f(point);
    point[i] = saved - h;
    const double minus = f(point);
    point[i] = saved;
    grad[i] = (plus - minus) / (2.0 * h);
  }
  return grad;
}

Matrix finite_diff_grad(const std::function<double()>& f, Matrix& m, double h) {
  if (!(h > 0.0)) throw ContractError("finite_diff_grad: h must be positive");
  Matrix grad(m.rows(), m.cols());
  auto values = m.data();
  auto g = grad.data();
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double saved = values[i];
    values[i] = saved + h;
    const double plus = f();
    values[i] = saved - h;
    const double minus = f();
    values[i] = saved;
    g[i] = (plus - minus) / (2.0 * h);
  }
  return grad;
}

double gradient_relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

void GradCheckReport::merge(const GradCheckReport& other) {
  coordinates += other.coordinates;
  kinks += other.kinks;
  max_relative_error = std::max(max_relative_error, other.max_relative_error);
  max_absolute_error = std::max(max_absolute_error, other.max_absolute_error);
}

GradCheckReport compare_gradients(const std::string& name, std::span<const double> analytic,
                                  std::span<const double> numeric) {
  if (analytic.size() != numeric.size()) {
    throw ShapeError("compare_gradients(" + name + "): length mismatch");
  }
  GradCheckReport r{name, analytic.size(), 0.0, 0.0};
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    r.max_relative_error =
        std::max(r.max_relative_error, gradient_relative_error(analytic[i], numeric[i]));
    r.max_absolute_error = std::max(r.max_absolute_error, std::abs(analytic[i] - numeric[i]));
  }
  return r;
}

bool straddles_kink(double analytic, double forward_quotient, double backward_quotient) {
  const bool sides_disagree = gradient_relative_error(forward_quotient, backward_quotient) > kKinkSideMismatch;
  const bool one_side_matches = std::min(gradient_relative_error(analytic, forward_quotient),
                                         gradient_relative_error(analytic, backward_quotient)) < kKinkSideMatch;
  return sides_disagree && one_side_matches;
}

GradCheckReport check_matrix_gradient(const std::string& name, const std::function<double()>& f, Matrix& m,
                                      const Matrix& analytic, double h) {
  if (!(h > 0.0)) throw ContractError("check_matrix_gradient: h must be positive");
  require_same_shape(m, analytic, "check_matrix_gradient");
  GradCheckReport r{name, m.size(), 0.0, 0.0};
  const double center = f();
  auto values = m.data();
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double saved = values[i];
    values[i] = saved + h;
    const double plus = f();
    values[i] = saved - h;
    const double minus = f();
    values[i] = saved;
    const double a = analytic.data()[i];
    const double numeric = (plus - minus) / (2.0 * h);
    if (straddles_kink(a, (plus - center) / h, (center - minus) / h)) {
      ++r.kinks;
      continue;
    }
    r.max_relative_error = std::max(r.max_relative_error, gradient_relative_error(a, numeric));
    r.max_absolute_error = std::max(r.max_absolute_error, std::abs(a - numeric));
  }
  return r;
}

GradCheckReport check_param_gradients(const std::string& name, const std::function<double()>& loss,
                                      const ParamList& params, double h) {
  GradCheckReport total{name, 0, 0.0, 0.0};
  for (ParamTensor* p : params) total.merge(check_matrix_gradient(p->name, loss, p->value, p->grad, h));
  return total;
}

}  // namespace ustack
