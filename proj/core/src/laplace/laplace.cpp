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

#include "ustack/laplace/laplace.hpp"

#include <cmath>
#include <string>

#include "ustack/errors.hpp"

namespace ustack {

namespace {
double sgn(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }
}  // namespace

void LossWeights::validate() const {
  if (!(w1 >= 0.0) || !(w2 >= 0.0) || !(w1 + w2 > 0.0)) {
    throw ValidationError("LossWeights: need w1, w2 >= 0 and w1 + w2 > 0");
  }
}

LaplaceNll laplace_nll(double x, double mu, double b, double epsilon) {
  if (!(b >= epsilon)) {
    throw ContractError("laplace_nll: scale " + std::to_string(b) + " below floor " +
                        std::to_string(epsilon));
  }
  const double r = x - mu;
  const double a = std::abs(r);
  return {std::log(2.0 * b) + a / b, -sgn(r) / b, 1.0 / b - a / (b * b)};
}

double laplace_sample(double mu, double b, double u) {
  if (!(b >= 0.0)) throw ContractError("laplace_sample: negative scale");
  if (u == 0.0 || b == 0.0) return mu;
  return mu - b * sgn(u) * std::log1p(-2.0 * std::abs(u));
}

double coverage_radius(double b, double p) {
  if (!(p > 0.0 && p < 1.0)) throw ValidationError("coverage_radius: p must be in (0, 1)");
  return -b * std::log1p(-p);
}

CombinedLossResult combined_loss(const VertexParamSet& pred, const VertexSet& target,
                                 const LossWeights& w) {
  w.validate();
  if (pred.size() != target.points.size()) {
    throw ShapeError("combined_loss: " + std::to_string(pred.size()) + " predicted vertices vs " +
                     std::to_string(target.points.size()) + " targets");
  }
  if (pred.size() == 0) throw ShapeError("combined_loss: empty element");
  CombinedLossResult out;
  out.grad.vertices.resize(pred.size());
  const double n = 2.0 * static_cast<double>(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const LaplaceVertex& v = pred.vertices[i];
    const Point2& t = target.points[i];
    const LaplaceNll nx = laplace_nll(t.x, v.mu_x, v.b_x);
    const LaplaceNll ny = laplace_nll(t.y, v.mu_y, v.b_y);
    out.l1 += std::abs(v.mu_x - t.x) + std::abs(v.mu_y - t.y);
    out.nll += nx.value + ny.value;
    LaplaceVertex& g = out.grad.vertices[i];
    g.mu_x = (w.w1 * sgn(v.mu_x - t.x) + w.w2 * nx.d_mu) / n;
    g.mu_y = (w.w1 * sgn(v.mu_y - t.y) + w.w2 * ny.d_mu) / n;
    g.b_x = w.w2 * nx.d_b / n;
    g.b_y = w.w2 * ny.d_b / n;
  }
  out.l1 /= n;
  out.nll /= n;
  out.value = w.w1 * out.l1 + w.w2 * out.nll;
  return out;
}

MatrixLossResult combined_loss(const Matrix& params, const Matrix& targets, const LossWeights& w) {
  w.validate();
  if (params.rows() != targets.rows() || params.cols() != 2 * targets.cols()) {
    throw ShapeError("combined_loss: params " + params.shape_string() + " vs targets " +
                     targets.shape_string());
  }
  MatrixLossResult out;
  out.d_params = Matrix(params.rows(), params.cols());
  const std::size_t m = params.rows();
  if (m == 0) return out;
  const std::size_t k = targets.cols() / 2;
  const double n = 2.0 * static_cast<double>(k);
  const double inv_m = 1.0 / static_cast<double>(m);
  for (std::size_t e = 0; e < m; ++e) {
    const auto p = params.row(e);
    const auto t = targets.row(e);
    auto g = out.d_params.row(e);
    for (std::size_t v = 0; v < k; ++v) {
      for (std::size_t axis = 0; axis < 2; ++axis) {
        const double mu = p[4 * v + 2 * axis];
        const double b = p[4 * v + 2 * axis + 1];
        const double x = t[2 * v + axis];
        const LaplaceNll nll = laplace_nll(x, mu, b);
        out.l1 += std::abs(mu - x) * inv_m / n;
        out.nll += nll.value * inv_m / n;
        g[4 * v + 2 * axis] = (w.w1 * sgn(mu - x) + w.w2 * nll.d_mu) * inv_m / n;
        g[4 * v + 2 * axis + 1] = w.w2 * nll.d_b * inv_m / n;
      }
    }
  }
  out.value = w.w1 * out.l1 + w.w2 * out.nll;
  return out;
}

VertexParamSet vertex_params_from_row(const Matrix& params, std::size_t row) {
  if (params.cols() % 4 != 0) throw ShapeError("vertex_params_from_row: cols not a multiple of 4");
  VertexParamSet out;
  const auto p = params.row(row);
  for (std::size_t v = 0; v < params.cols() / 4; ++v) {
    out.vertices.push_back({p[4 * v], p[4 * v + 1], p[4 * v + 2], p[4 * v + 3]});
  }
  return out;
}

Matrix param_matrix(const std::vector<VertexParamSet>& elements) {
  if (elements.empty()) return {};
  const std::size_t k = elements.front().size();
  Matrix out(elements.size(), 4 * k);
  for (std::size_t e = 0; e < elements.size(); ++e) {
    if (elements[e].size() != k) {
      throw ShapeError("param_matrix: element " + std::to_string(e) + " has " +
                       std::to_string(elements[e].size()) + " vertices, expected " +
                       std::to_string(k));
    }
    auto r = out.row(e);
    for (std::size_t v = 0; v < k; ++v) {
      const LaplaceVertex& lv = elements[e].vertices[v];
      r[4 * v] = lv.mu_x;
      r[4 * v + 1] = lv.b_x;
      r[4 * v + 2] = lv.mu_y;
      r[4 * v + 3] = lv.b_y;
    }
  }
  return out;
}

Matrix vertex_matrix(const std::vector<VertexSet>& elements, std::size_t k) {
  Matrix out(elements.size(), 2 * k);
  for (std::size_t e = 0; e < elements.size(); ++e) {
    if (elements[e].points.size() != k) {
      throw ShapeError("vertex_matrix: element " + std::to_string(e) + " has " +
                       std::to_string(elements[e].points.size()) + " points, expected " +
                       std::to_string(k));
    }
    auto r = out.row(e);
    for (std::size_t v = 0; v < k; ++v) {
      r[2 * v] = elements[e].points[v].x;
      r[2 * v + 1] = elements[e].points[v].y;
    }
  }
  return out;
}

}  // namespace ustack
