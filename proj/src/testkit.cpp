#include "afflabel/testkit.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <set>

#include <Eigen/QR>
#include <Eigen/SVD>

#include "afflabel/errors.hpp"

namespace afflabel::testkit {

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double standard_normal(std::mt19937_64& rng) {
  // Box-Muller; one value per call keeps the stream position obvious.
  const double u1 = 1.0 - uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Eigen::MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = standard_normal(rng);
  }
  return m;
}

namespace {

Eigen::MatrixXd orthonormal_columns(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(gaussian_matrix(rows, cols, rng));
  return qr.householderQ() * Eigen::MatrixXd::Identity(rows, cols);
}

std::string scene_id(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "syn%06zu", index);
  return buf;
}

Eigen::VectorXd add_noise(Eigen::VectorXd x, double sigma, std::mt19937_64& rng) {
  if (sigma > 0.0) {
    for (Eigen::Index r = 0; r < x.size(); ++r) x(r) += sigma * standard_normal(rng);
  }
  return x;
}

std::size_t shared_dims(const SynthSpec& spec, std::size_t group) {
  std::size_t n = 0;
  for (const auto& [a, b] : spec.overlap_pairs) {
    if (a == group || b == group) n += static_cast<std::size_t>(spec.intersection_dim);
  }
  return n;
}

}  // namespace

std::vector<std::pair<std::size_t, std::size_t>> ring_pairs(std::size_t groups) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  if (groups < 2) return out;
  if (groups == 2) return {{0, 1}};
  for (std::size_t g = 0; g < groups; ++g) out.emplace_back(g, (g + 1) % groups);
  return out;
}

void SynthSpec::validate() const {
  if (dim < 2) throw DataError("synth: D must be >= 2");
  if (d_true < 1 || d_true >= dim) throw DataError("synth: need 1 <= d_true < D");
  if (groups < 1 || groups > kCatalogSize) {
    throw DataError("synth: groups must lie in [1, " + std::to_string(kCatalogSize) + "]");
  }
  if (points_per_group < 1) throw DataError("synth: points_per_group must be >= 1");
  if (!(noise_sigma >= 0.0)) throw DataError("synth: noise_sigma must be >= 0");
  if (!(overlap_fraction >= 0.0 && overlap_fraction < 1.0)) {
    throw DataError("synth: overlap_fraction must lie in [0, 1)");
  }
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (const auto& [a, b] : overlap_pairs) {
    if (a >= groups || b >= groups || a == b) throw DataError("synth: invalid overlap pair");
    if (!seen.insert({std::min(a, b), std::max(a, b)}).second) {
      throw DataError("synth: duplicate overlap pair");
    }
  }
  if (overlap_fraction > 0.0 && overlap_pairs.empty()) {
    throw DataError("synth: overlap_fraction > 0 needs overlap pairs");
  }
  if (curvature == Curvature::kLinear) {
    if (!overlap_pairs.empty() && intersection_dim < 1) {
      throw DataError("synth: intersection_dim must be >= 1");
    }
    for (std::size_t g = 0; g < groups; ++g) {
      if (static_cast<Eigen::Index>(shared_dims(*this, g)) >= d_true) {
        throw DataError("synth: infeasible intersection (d_true too small for group " +
                        std::to_string(g) + ")");
      }
    }
  } else {
    if (!overlap_pairs.empty()) {
      throw DataError("synth: overlap pairs are only supported for linear subspaces");
    }
    if (shared_span_dim < 0 || shared_span_dim > dim) {
      throw DataError("synth: shared_span_dim must lie in [0, D]");
    }
    if (shared_span_dim > 0 && shared_span_dim <= d_true) {
      throw DataError("synth: shared_span_dim must exceed d_true");
    }
    if (!(curvature_scale >= 0.0) || !(offset_scale >= 0.0)) {
      throw DataError("synth: curvature_scale and offset_scale must be >= 0");
    }
  }
}

SynthData gen_union_of_subspaces(const SynthSpec& spec) {
  spec.validate();
  if (spec.curvature != Curvature::kLinear) throw DataError("synth: expected a linear spec");
  std::mt19937_64 rng(spec.seed);

  const auto int_dim = static_cast<Eigen::Index>(spec.intersection_dim);
  Eigen::Index total = static_cast<Eigen::Index>(spec.overlap_pairs.size()) * int_dim;
  for (std::size_t g = 0; g < spec.groups; ++g) {
    total += spec.d_true - static_cast<Eigen::Index>(shared_dims(spec, g));
  }
  if (total > spec.dim) {
    throw DataError("synth: " + std::to_string(total) + " independent directions do not fit in D = " +
                    std::to_string(spec.dim));
  }
  const Eigen::MatrixXd directions = orthonormal_columns(spec.dim, total, rng);

  Eigen::Index next = 0;
  std::vector<Eigen::MatrixXd> shared;
  for (std::size_t p = 0; p < spec.overlap_pairs.size(); ++p) {
    shared.push_back(directions.middleCols(next, int_dim));
    next += int_dim;
  }
  SynthData out;
  for (std::size_t g = 0; g < spec.groups; ++g) {
    Eigen::MatrixXd basis(spec.dim, spec.d_true);
    Eigen::Index col = 0;
    for (std::size_t p = 0; p < spec.overlap_pairs.size(); ++p) {
      const auto& [a, b] = spec.overlap_pairs[p];
      if (a == g || b == g) {
        basis.middleCols(col, int_dim) = shared[p];
        col += int_dim;
      }
    }
    const Eigen::Index priv = spec.d_true - col;
    basis.rightCols(priv) = directions.middleCols(next, priv);
    next += priv;
    out.bases.push_back(std::move(basis));
  }

  std::vector<Eigen::VectorXd> points;
  std::vector<LabelSet> labels;
  auto emit_block = [&](std::size_t per_group) {
    const auto overlap_per_group =
        static_cast<std::size_t>(std::llround(spec.overlap_fraction * static_cast<double>(per_group)));
    for (std::size_t g = 0; g < spec.groups; ++g) {
      for (std::size_t i = 0; i < per_group - overlap_per_group; ++i) {
        const Eigen::VectorXd coeff = gaussian_matrix(spec.d_true, 1, rng);
        points.push_back(add_noise(out.bases[g] * coeff, spec.noise_sigma, rng));
        labels.emplace_back().set(g);
      }
    }
    const std::size_t overlap_total = overlap_per_group * spec.groups;
    for (std::size_t i = 0; i < overlap_total; ++i) {
      const std::size_t p = i % spec.overlap_pairs.size();
      const Eigen::VectorXd coeff = gaussian_matrix(int_dim, 1, rng);
      points.push_back(add_noise(shared[p] * coeff, spec.noise_sigma, rng));
      LabelSet set;
      set.set(spec.overlap_pairs[p].first);
      set.set(spec.overlap_pairs[p].second);
      labels.push_back(set);
    }
  };
  emit_block(spec.points_per_group);
  out.n_learning = points.size();
  if (spec.validation_per_group > 0) emit_block(spec.validation_per_group);

  Eigen::MatrixXd data(spec.dim, static_cast<Eigen::Index>(points.size()));
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < points.size(); ++i) {
    data.col(static_cast<Eigen::Index>(i)) = points[i];
    ids.push_back(scene_id(i));
  }
  out.set = LabeledSet(FeatureMatrix(std::move(data), ids), LabelTable(ids, std::move(labels)));
  return out;
}

SynthData gen_curved_manifold(const SynthSpec& spec) {
  spec.validate();
  if (spec.curvature != Curvature::kQuadraticEmbedding) {
    throw DataError("synth: expected a quadratic-embedding spec");
  }
  std::mt19937_64 rng(spec.seed);
  const Eigen::Index d = spec.d_true;
  const Eigen::Index monomials = d * (d + 1) / 2;
  const Eigen::Index span = spec.shared_span_dim > 0 ? spec.shared_span_dim : spec.dim;
  const Eigen::MatrixXd ambient = spec.shared_span_dim > 0
                                      ? orthonormal_columns(spec.dim, span, rng)
                                      : Eigen::MatrixXd::Identity(spec.dim, spec.dim);
  const double scale = 1.0 / std::sqrt(static_cast<double>(span));

  struct Embedding {
    Eigen::VectorXd offset;
    Eigen::MatrixXd linear;
    Eigen::MatrixXd quadratic;
  };
  std::vector<Embedding> maps;
  for (std::size_t g = 0; g < spec.groups; ++g) {
    Embedding e;
    Eigen::VectorXd c = gaussian_matrix(span, 1, rng);
    e.offset = spec.offset_scale * ambient * c.normalized();
    e.linear = ambient * (scale * gaussian_matrix(span, d, rng));
    e.quadratic = spec.curvature_scale * (ambient * (scale * gaussian_matrix(span, monomials, rng)));
    maps.push_back(std::move(e));
  }

  std::vector<Eigen::VectorXd> points;
  std::vector<LabelSet> labels;
  auto emit_block = [&](std::size_t per_group) {
    for (std::size_t g = 0; g < spec.groups; ++g) {
      for (std::size_t i = 0; i < per_group; ++i) {
        Eigen::VectorXd t(d);
        for (Eigen::Index a = 0; a < d; ++a) t(a) = 2.0 * uniform01(rng) - 1.0;
        Eigen::VectorXd m(monomials);
        Eigen::Index idx = 0;
        for (Eigen::Index a = 0; a < d; ++a) {
          for (Eigen::Index b = a; b < d; ++b) m(idx++) = t(a) * t(b);
        }
        Eigen::VectorXd x = maps[g].offset + maps[g].linear * t + maps[g].quadratic * m;
        points.push_back(add_noise(std::move(x), spec.noise_sigma, rng));
        labels.emplace_back().set(g);
      }
    }
  };
  emit_block(spec.points_per_group);
  SynthData out;
  out.n_learning = points.size();
  if (spec.validation_per_group > 0) emit_block(spec.validation_per_group);

  Eigen::MatrixXd data(spec.dim, static_cast<Eigen::Index>(points.size()));
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < points.size(); ++i) {
    data.col(static_cast<Eigen::Index>(i)) = points[i];
    ids.push_back(scene_id(i));
  }
  out.set = LabeledSet(FeatureMatrix(std::move(data), ids), LabelTable(ids, std::move(labels)));
  return out;
}

ProjectionOracle oracle_projection(const Eigen::Ref<const Eigen::MatrixXd>& basis,
                                   const Eigen::Ref<const Eigen::VectorXd>& j) {
  if (basis.cols() == 0) throw DataError("oracle_projection: empty basis");
  if (basis.rows() != j.size()) throw DataError("oracle_projection: dimension mismatch");
  const double norm2 = j.squaredNorm();
  if (!(norm2 > 0.0)) throw DataError("oracle_projection: zero vector");

  ProjectionOracle out;
  const Eigen::MatrixXd projector = basis * basis.transpose();
  out.via_projection_matrix = (projector * j).norm() / std::sqrt(norm2);

  const Eigen::VectorXd x = basis.colPivHouseholderQr().solve(j);
  const double residual2 = (basis * x - j).squaredNorm();
  out.via_least_squares = std::sqrt(std::max(0.0, norm2 - residual2) / norm2);
  return out;
}

double oracle_angle(const Eigen::Ref<const Eigen::MatrixXd>& with_query,
                    const Eigen::Ref<const Eigen::MatrixXd>& without_query) {
  if (with_query.rows() != without_query.rows()) throw DataError("oracle_angle: row mismatch");
  Eigen::JacobiSVD<Eigen::MatrixXd> a(with_query, Eigen::ComputeFullU);
  Eigen::JacobiSVD<Eigen::MatrixXd> b(without_query, Eigen::ComputeFullU);
  const Eigen::VectorXd sa = a.singularValues();
  const Eigen::VectorXd sb = b.singularValues();
  const Eigen::MatrixXd ua = a.matrixU().leftCols(sa.size()) * sa.asDiagonal();
  const Eigen::MatrixXd ub = b.matrixU().leftCols(sb.size()) * sb.asDiagonal();
  const Eigen::MatrixXd r = ua.transpose() * ub;
  const double numerator = Eigen::JacobiSVD<Eigen::MatrixXd>(r).singularValues().sum();
  const Eigen::Index common = std::min(sa.size(), sb.size());
  double denominator = 0.0;
  for (Eigen::Index k = 0; k < common; ++k) denominator += sa(k) * sb(k);
  if (!(denominator > 0.0)) throw DataError("oracle_angle: zero matrix");
  return std::acos(std::clamp(numerator / denominator, -1.0, 1.0));
}

}  // namespace afflabel::testkit
