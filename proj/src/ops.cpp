#include "legnn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>

namespace legnn {

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    std::ostringstream os;
    os << op << ": shape mismatch " << a.rows() << "x" << a.cols() << " vs "
       << b.rows() << "x" << b.cols();
    throw DimensionError(os.str());
  }
}

bool tracking(std::initializer_list<const Tensor*> inputs) {
  if (Tape::current() == nullptr) return false;
  for (const Tensor* t : inputs) {
    if (t->requires_grad()) return true;
  }
  return false;
}

void record(const char* kind, std::initializer_list<const Tensor*> inputs,
            Tensor& out,
            std::function<void(const Tensor&, GradientMap&)> backward) {
  out.set_requires_grad(true);
  TapeOp op;
  op.kind = kind;
  for (const Tensor* t : inputs) op.inputs.push_back(t->id());
  op.output = out.id();
  op.backward = std::move(backward);
  Tape::current()->record(std::move(op));
}

// C += A^T * B, all dense.
void accumulate_at_b(const Tensor& a, const Tensor& b, Tensor& c) {
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  auto av = a.values();
  auto bv = b.values();
  auto cv = c.values_mut();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = av[i * k + p];
      if (aip == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) {
        cv[p * n + j] += aip * bv[i * n + j];
      }
    }
  }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) {
    std::ostringstream os;
    os << "matmul: inner dimensions differ, " << a.rows() << "x" << a.cols()
       << " * " << b.rows() << "x" << b.cols();
    throw DimensionError(os.str());
  }
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  Tensor out(m, n);
  {
    auto av = a.values();
    auto bv = b.values();
    auto ov = out.values_mut();
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t p = 0; p < k; ++p) {
        const double aip = av[i * k + p];
        if (aip == 0.0) continue;
        const double* brow = bv.data() + p * n;
        double* orow = ov.data() + i * n;
        for (std::size_t j = 0; j < n; ++j) orow[j] += aip * brow[j];
      }
    }
  }
  if (tracking({&a, &b})) {
    record("matmul", {&a, &b}, out, [a, b](const Tensor& g, GradientMap& sink) {
      if (a.requires_grad()) {
        // dA = G * B^T
        Tensor da(a.rows(), a.cols());
        auto gv = g.values();
        auto bv = b.values();
        auto dv = da.values_mut();
        const std::size_t n = b.cols(), k = b.rows();
        for (std::size_t i = 0; i < a.rows(); ++i) {
          for (std::size_t p = 0; p < k; ++p) {
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
              acc += gv[i * n + j] * bv[p * n + j];
            }
            dv[i * k + p] = acc;
          }
        }
        sink.accumulate(a.id(), da);
      }
      if (b.requires_grad()) {
        Tensor db(b.rows(), b.cols());
        accumulate_at_b(a, g, db);  // dB = A^T * G
        sink.accumulate(b.id(), db);
      }
    });
  }
  return out;
}

Tensor spmm(const SparseMatrix& s, const Tensor& d) {
  if (s.cols() != d.rows()) {
    std::ostringstream os;
    os << "spmm: inner dimensions differ, " << s.rows() << "x" << s.cols()
       << " * " << d.rows() << "x" << d.cols();
    throw DimensionError(os.str());
  }
  const std::size_t n = d.cols();
  Tensor out(s.rows(), n);
  {
    auto offsets = s.row_offsets();
    auto cols = s.col_indices();
    auto vals = s.values();
    auto dv = d.values();
    auto ov = out.values_mut();
    for (std::size_t r = 0; r < s.rows(); ++r) {
      double* orow = ov.data() + r * n;
      for (std::size_t k = offsets[r]; k < offsets[r + 1]; ++k) {
        const double w = vals[k];
        const double* drow = dv.data() + cols[k] * n;
        for (std::size_t j = 0; j < n; ++j) orow[j] += w * drow[j];
      }
    }
  }
  if (tracking({&d})) {
    SparseMatrix st = s.transpose();
    record("spmm", {&d}, out, [st, d](const Tensor& g, GradientMap& sink) {
      // dD = S^T * G
      Tensor dd(d.rows(), d.cols());
      auto offsets = st.row_offsets();
      auto cols = st.col_indices();
      auto vals = st.values();
      auto gv = g.values();
      auto dv = dd.values_mut();
      const std::size_t n = g.cols();
      for (std::size_t r = 0; r < st.rows(); ++r) {
        double* drow = dv.data() + r * n;
        for (std::size_t k = offsets[r]; k < offsets[r + 1]; ++k) {
          const double w = vals[k];
          const double* grow = gv.data() + cols[k] * n;
          for (std::size_t j = 0; j < n; ++j) drow[j] += w * grow[j];
        }
      }
      sink.accumulate(d.id(), dd);
    });
  }
  return out;
}

Tensor spmm_values(const SparseMatrix& pattern, const Tensor& values,
                   const Tensor& d) {
  if (values.rows() != pattern.nnz() || values.cols() != 1) {
    std::ostringstream os;
    os << "spmm_values: values must be nnz x 1 (" << pattern.nnz()
       << "x1), got " << values.rows() << "x" << values.cols();
    throw DimensionError(os.str());
  }
  SparseMatrix s = pattern.with_values(
      std::vector<double>(values.values().begin(), values.values().end()));
  if (s.cols() != d.rows()) {
    throw DimensionError("spmm_values: inner dimensions differ");
  }
  const std::size_t n = d.cols();
  Tensor out(s.rows(), n);
  {
    auto offsets = s.row_offsets();
    auto cols = s.col_indices();
    auto vals = s.values();
    auto dv = d.values();
    auto ov = out.values_mut();
    for (std::size_t r = 0; r < s.rows(); ++r) {
      double* orow = ov.data() + r * n;
      for (std::size_t k = offsets[r]; k < offsets[r + 1]; ++k) {
        const double w = vals[k];
        const double* drow = dv.data() + cols[k] * n;
        for (std::size_t j = 0; j < n; ++j) orow[j] += w * drow[j];
      }
    }
  }
  if (tracking({&values, &d})) {
    record("spmm_values", {&values, &d}, out,
           [s, values, d](const Tensor& g, GradientMap& sink) {
             const std::size_t n = g.cols();
             auto offsets = s.row_offsets();
             auto cols = s.col_indices();
             auto gv = g.values();
             auto dvv = d.values();
             if (values.requires_grad()) {
               // dvals[e=(r,c)] = <G row r, D row c>
               Tensor dvals(s.nnz(), 1);
               auto out_v = dvals.values_mut();
               for (std::size_t r = 0; r < s.rows(); ++r) {
                 const double* grow = gv.data() + r * n;
                 for (std::size_t k = offsets[r]; k < offsets[r + 1]; ++k) {
                   const double* drow = dvv.data() + cols[k] * n;
                   double acc = 0.0;
                   for (std::size_t j = 0; j < n; ++j) acc += grow[j] * drow[j];
                   out_v[k] = acc;
                 }
               }
               sink.accumulate(values.id(), dvals);
             }
             if (d.requires_grad()) {
               Tensor dd(d.rows(), d.cols());
               auto ddv = dd.values_mut();
               auto vals = s.values();
               for (std::size_t r = 0; r < s.rows(); ++r) {
                 const double* grow = gv.data() + r * n;
                 for (std::size_t k = offsets[r]; k < offsets[r + 1]; ++k) {
                   double* drow = ddv.data() + cols[k] * n;
                   const double w = vals[k];
                   for (std::size_t j = 0; j < n; ++j) drow[j] += w * grow[j];
                 }
               }
               sink.accumulate(d.id(), dd);
             }
           });
  }
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  Tensor out(a.rows(), a.cols());
  auto av = a.values();
  auto bv = b.values();
  auto ov = out.values_mut();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] + bv[i];
  if (tracking({&a, &b})) {
    record("add", {&a, &b}, out, [a, b](const Tensor& g, GradientMap& sink) {
      if (a.requires_grad()) sink.accumulate(a.id(), g);
      if (b.requires_grad()) sink.accumulate(b.id(), g);
    });
  }
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  Tensor out(a.rows(), a.cols());
  auto av = a.values();
  auto bv = b.values();
  auto ov = out.values_mut();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] - bv[i];
  if (tracking({&a, &b})) {
    record("sub", {&a, &b}, out, [a, b](const Tensor& g, GradientMap& sink) {
      if (a.requires_grad()) sink.accumulate(a.id(), g);
      if (b.requires_grad()) {
        Tensor neg(g.rows(), g.cols());
        auto nv = neg.values_mut();
        auto gv = g.values();
        for (std::size_t i = 0; i < nv.size(); ++i) nv[i] = -gv[i];
        sink.accumulate(b.id(), neg);
      }
    });
  }
  return out;
}

Tensor scale(const Tensor& t, double factor) {
  Tensor out(t.rows(), t.cols());
  auto tv = t.values();
  auto ov = out.values_mut();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = factor * tv[i];
  if (tracking({&t})) {
    record("scale", {&t}, out, [t, factor](const Tensor& g, GradientMap& sink) {
      Tensor dt(g.rows(), g.cols());
      auto dv = dt.values_mut();
      auto gv = g.values();
      for (std::size_t i = 0; i < dv.size(); ++i) dv[i] = factor * gv[i];
      sink.accumulate(t.id(), dt);
    });
  }
  return out;
}

Tensor elementwise_mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "elementwise_mul");
  Tensor out(a.rows(), a.cols());
  auto av = a.values();
  auto bv = b.values();
  auto ov = out.values_mut();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] * bv[i];
  if (tracking({&a, &b})) {
    record("elementwise_mul", {&a, &b}, out,
           [a, b](const Tensor& g, GradientMap& sink) {
             auto gv = g.values();
             if (a.requires_grad()) {
               Tensor da(a.rows(), a.cols());
               auto dv = da.values_mut();
               auto bv2 = b.values();
               for (std::size_t i = 0; i < dv.size(); ++i) dv[i] = gv[i] * bv2[i];
               sink.accumulate(a.id(), da);
             }
             if (b.requires_grad()) {
               Tensor db(b.rows(), b.cols());
               auto dv = db.values_mut();
               auto av2 = a.values();
               for (std::size_t i = 0; i < dv.size(); ++i) dv[i] = gv[i] * av2[i];
               sink.accumulate(b.id(), db);
             }
           });
  }
  return out;
}

Tensor add_row_vector(const Tensor& t, const Tensor& bias) {
  if (bias.rows() != 1 || bias.cols() != t.cols()) {
    std::ostringstream os;
    os << "add_row_vector: bias must be 1x" << t.cols() << ", got "
       << bias.rows() << "x" << bias.cols();
    throw DimensionError(os.str());
  }
  Tensor out(t.rows(), t.cols());
  auto tv = t.values();
  auto bv = bias.values();
  auto ov = out.values_mut();
  const std::size_t n = t.cols();
  for (std::size_t r = 0; r < t.rows(); ++r) {
    for (std::size_t j = 0; j < n; ++j) ov[r * n + j] = tv[r * n + j] + bv[j];
  }
  if (tracking({&t, &bias})) {
    record("add_row_vector", {&t, &bias}, out,
           [t, bias](const Tensor& g, GradientMap& sink) {
             if (t.requires_grad()) sink.accumulate(t.id(), g);
             if (bias.requires_grad()) {
               Tensor db(1, bias.cols());
               auto dv = db.values_mut();
               auto gv = g.values();
               const std::size_t n = bias.cols();
               for (std::size_t r = 0; r < g.rows(); ++r) {
                 for (std::size_t j = 0; j < n; ++j) dv[j] += gv[r * n + j];
               }
               sink.accumulate(bias.id(), db);
             }
           });
  }
  return out;
}

namespace {

double activate(double x, const Activation& act) {
  switch (act.kind) {
    case ActivationKind::relu:
      return x > 0.0 ? x : 0.0;
    case ActivationKind::elu:
      return x > 0.0 ? x : std::expm1(x);
    case ActivationKind::leaky_relu:
      return x > 0.0 ? x : act.slope * x;
    case ActivationKind::sigmoid:
      return 1.0 / (1.0 + std::exp(-x));
  }
  return x;
}

double activate_grad(double x, double y, const Activation& act) {
  switch (act.kind) {
    case ActivationKind::relu:
      return x > 0.0 ? 1.0 : 0.0;
    case ActivationKind::elu:
      return x > 0.0 ? 1.0 : y + 1.0;  // d/dx (e^x - 1) = e^x
    case ActivationKind::leaky_relu:
      return x > 0.0 ? 1.0 : act.slope;
    case ActivationKind::sigmoid:
      return y * (1.0 - y);
  }
  return 1.0;
}

}  // namespace

Tensor apply_activation(const Tensor& t, const Activation& act) {
  if (act.kind == ActivationKind::leaky_relu && !(act.slope > 0.0)) {
    throw ContractError("apply_activation: leaky_relu slope must be > 0");
  }
  if (debug_checks_enabled()) t.throw_if_not_finite("apply_activation input");
  Tensor out(t.rows(), t.cols());
  auto tv = t.values();
  auto ov = out.values_mut();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = activate(tv[i], act);
  if (tracking({&t})) {
    record("activation", {&t}, out,
           [t, out, act](const Tensor& g, GradientMap& sink) {
             Tensor dt(t.rows(), t.cols());
             auto dv = dt.values_mut();
             auto gv = g.values();
             auto xv = t.values();
             auto yv = out.values();
             for (std::size_t i = 0; i < dv.size(); ++i) {
               dv[i] = gv[i] * activate_grad(xv[i], yv[i], act);
             }
             sink.accumulate(t.id(), dt);
           });
  }
  return out;
}

Tensor softmax_rows(const Tensor& t) {
  if (t.cols() < 1) throw ContractError("softmax_rows: need at least 1 column");
  Tensor out(t.rows(), t.cols());
  const std::size_t n = t.cols();
  auto tv = t.values();
  auto ov = out.values_mut();
  for (std::size_t r = 0; r < t.rows(); ++r) {
    const double* row = tv.data() + r * n;
    double* orow = ov.data() + r * n;
    double mx = row[0];
    for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, row[j]);
    double denom = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      orow[j] = std::exp(row[j] - mx);
      denom += orow[j];
    }
    for (std::size_t j = 0; j < n; ++j) orow[j] /= denom;
  }
  if (tracking({&t})) {
    record("softmax_rows", {&t}, out,
           [t, out](const Tensor& g, GradientMap& sink) {
             // dx_j = y_j * (g_j - sum_k g_k y_k) per row
             Tensor dt(t.rows(), t.cols());
             const std::size_t n = t.cols();
             auto dv = dt.values_mut();
             auto gv = g.values();
             auto yv = out.values();
             for (std::size_t r = 0; r < t.rows(); ++r) {
               const double* grow = gv.data() + r * n;
               const double* yrow = yv.data() + r * n;
               double dot = 0.0;
               for (std::size_t j = 0; j < n; ++j) dot += grow[j] * yrow[j];
               double* drow = dv.data() + r * n;
               for (std::size_t j = 0; j < n; ++j) {
                 drow[j] = yrow[j] * (grow[j] - dot);
               }
             }
             sink.accumulate(t.id(), dt);
           });
  }
  return out;
}

Tensor log_clamped(const Tensor& t, double floor) {
  if (!(floor > 0.0)) throw ContractError("log_clamped: floor must be > 0");
  Tensor out(t.rows(), t.cols());
  auto tv = t.values();
  auto ov = out.values_mut();
  for (std::size_t i = 0; i < ov.size(); ++i) {
    ov[i] = std::log(std::max(tv[i], floor));
  }
  if (tracking({&t})) {
    record("log_clamped", {&t}, out,
           [t, floor](const Tensor& g, GradientMap& sink) {
             Tensor dt(t.rows(), t.cols());
             auto dv = dt.values_mut();
             auto gv = g.values();
             auto xv = t.values();
             for (std::size_t i = 0; i < dv.size(); ++i) {
               dv[i] = xv[i] > floor ? gv[i] / xv[i] : 0.0;
             }
             sink.accumulate(t.id(), dt);
           });
  }
  return out;
}

Tensor sum_all(const Tensor& t) {
  double acc = 0.0;
  for (double v : t.values()) acc += v;
  Tensor out(1, 1, {acc});
  if (tracking({&t})) {
    record("sum_all", {&t}, out, [t](const Tensor& g, GradientMap& sink) {
      sink.accumulate(t.id(), Tensor::full(t.rows(), t.cols(), g.at(0, 0)));
    });
  }
  return out;
}

Tensor slice_rows(const Tensor& t, std::size_t begin, std::size_t end) {
  if (begin > end || end > t.rows()) {
    std::ostringstream os;
    os << "slice_rows: [" << begin << "," << end << ") invalid for "
       << t.rows() << " rows";
    throw DimensionError(os.str());
  }
  const std::size_t n = t.cols();
  Tensor out(end - begin, n);
  std::copy_n(t.values().data() + begin * n, (end - begin) * n,
              out.values_mut().data());
  if (tracking({&t})) {
    record("slice_rows", {&t}, out,
           [t, begin](const Tensor& g, GradientMap& sink) {
             Tensor dt(t.rows(), t.cols());
             std::copy_n(g.values().data(), g.size(),
                         dt.values_mut().data() + begin * t.cols());
             sink.accumulate(t.id(), dt);
           });
  }
  return out;
}

Tensor concat_rows(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.cols()) {
    throw DimensionError("concat_rows: column counts differ");
  }
  const std::size_t n = a.cols();
  Tensor out(a.rows() + b.rows(), n);
  auto ov = out.values_mut();
  std::copy_n(a.values().data(), a.size(), ov.data());
  std::copy_n(b.values().data(), b.size(), ov.data() + a.size());
  if (tracking({&a, &b})) {
    record("concat_rows", {&a, &b}, out,
           [a, b](const Tensor& g, GradientMap& sink) {
             auto gv = g.values();
             if (a.requires_grad()) {
               Tensor da(a.rows(), a.cols());
               std::copy_n(gv.data(), a.size(), da.values_mut().data());
               sink.accumulate(a.id(), da);
             }
             if (b.requires_grad()) {
               Tensor db(b.rows(), b.cols());
               std::copy_n(gv.data() + a.size(), b.size(),
                           db.values_mut().data());
               sink.accumulate(b.id(), db);
             }
           });
  }
  return out;
}

Tensor dropout(const Tensor& t, double p, Rng& rng) {
  if (p < 0.0 || p >= 1.0) {
    throw ContractError("dropout: p must be in [0, 1)");
  }
  if (p == 0.0) return t;
  const double keep_scale = 1.0 / (1.0 - p);
  Tensor mask(t.rows(), t.cols());
  {
    auto mv = mask.values_mut();
    for (std::size_t i = 0; i < mv.size(); ++i) {
      mv[i] = rng.uniform() < p ? 0.0 : keep_scale;
    }
  }
  Tensor out(t.rows(), t.cols());
  auto tv = t.values();
  auto mv = mask.values();
  auto ov = out.values_mut();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = tv[i] * mv[i];
  if (tracking({&t})) {
    record("dropout", {&t}, out, [t, mask](const Tensor& g, GradientMap& sink) {
      Tensor dt(t.rows(), t.cols());
      auto dv = dt.values_mut();
      auto gv = g.values();
      auto mv2 = mask.values();
      for (std::size_t i = 0; i < dv.size(); ++i) dv[i] = gv[i] * mv2[i];
      sink.accumulate(t.id(), dt);
    });
  }
  return out;
}

Tensor edge_score_sum(const Tensor& scores, const SparseMatrix& pattern) {
  if (pattern.rows() != pattern.cols()) {
    throw DimensionError("edge_score_sum: pattern must be square");
  }
  if (scores.rows() != pattern.rows() || scores.cols() != 1) {
    throw DimensionError("edge_score_sum: scores must be rows x 1");
  }
  Tensor out(pattern.nnz(), 1);
  {
    auto offsets = pattern.row_offsets();
    auto cols = pattern.col_indices();
    auto sv = scores.values();
    auto ov = out.values_mut();
    for (std::size_t r = 0; r < pattern.rows(); ++r) {
      for (std::size_t k = offsets[r]; k < offsets[r + 1]; ++k) {
        ov[k] = sv[r] + sv[cols[k]];
      }
    }
  }
  if (tracking({&scores})) {
    record("edge_score_sum", {&scores}, out,
           [scores, pattern](const Tensor& g, GradientMap& sink) {
             Tensor ds(scores.rows(), 1);
             auto dv = ds.values_mut();
             auto gv = g.values();
             auto offsets = pattern.row_offsets();
             auto cols = pattern.col_indices();
             for (std::size_t r = 0; r < pattern.rows(); ++r) {
               for (std::size_t k = offsets[r]; k < offsets[r + 1]; ++k) {
                 dv[r] += gv[k];
                 dv[cols[k]] += gv[k];
               }
             }
             sink.accumulate(scores.id(), ds);
           });
  }
  return out;
}

Tensor edge_softmax(const Tensor& edge_values, const SparseMatrix& pattern) {
  if (edge_values.rows() != pattern.nnz() || edge_values.cols() != 1) {
    throw DimensionError("edge_softmax: values must be nnz x 1");
  }
  Tensor out(pattern.nnz(), 1);
  {
    auto offsets = pattern.row_offsets();
    auto xv = edge_values.values();
    auto ov = out.values_mut();
    for (std::size_t r = 0; r < pattern.rows(); ++r) {
      const std::size_t b = offsets[r], e = offsets[r + 1];
      if (b == e) continue;
      double mx = xv[b];
      for (std::size_t k = b + 1; k < e; ++k) mx = std::max(mx, xv[k]);
      double denom = 0.0;
      for (std::size_t k = b; k < e; ++k) {
        ov[k] = std::exp(xv[k] - mx);
        denom += ov[k];
      }
      for (std::size_t k = b; k < e; ++k) ov[k] /= denom;
    }
  }
  if (tracking({&edge_values})) {
    record("edge_softmax", {&edge_values}, out,
           [edge_values, out, pattern](const Tensor& g, GradientMap& sink) {
             Tensor dx(edge_values.rows(), 1);
             auto dv = dx.values_mut();
             auto gv = g.values();
             auto yv = out.values();
             auto offsets = pattern.row_offsets();
             for (std::size_t r = 0; r < pattern.rows(); ++r) {
               const std::size_t b = offsets[r], e = offsets[r + 1];
               double dot = 0.0;
               for (std::size_t k = b; k < e; ++k) dot += gv[k] * yv[k];
               for (std::size_t k = b; k < e; ++k) {
                 dv[k] = yv[k] * (gv[k] - dot);
               }
             }
             sink.accumulate(edge_values.id(), dx);
           });
  }
  return out;
}

double grad_check(const std::function<Tensor()>& f, std::span<Tensor> params,
                  double step) {
  // Reject non-deterministic functions up front (dropout left enabled, a
  // resampled adjacency, ...): two plain evaluations must agree bitwise.
  Tensor probe_a = f();
  Tensor probe_b = f();
  if (probe_a.rows() != 1 || probe_a.cols() != 1) {
    throw ContractError("grad_check: f must return a 1x1 tensor");
  }
  if (probe_a.at(0, 0) != probe_b.at(0, 0)) {
    throw ContractError("grad_check: f is not deterministic given params");
  }

  Tape tape;
  GradientMap grads;
  {
    Tape::Scope scope(tape);
    Tensor loss = f();
    grads = tape.backward(loss);
  }

  double max_rel = 0.0;
  for (Tensor& p : params) {
    const Tensor analytic = grads.get(p);
    auto pv = p.values_mut();
    for (std::size_t i = 0; i < pv.size(); ++i) {
      const double saved = pv[i];
      pv[i] = saved + step;
      const double up = f().at(0, 0);
      pv[i] = saved - step;
      const double down = f().at(0, 0);
      pv[i] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double a = analytic.values()[i];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
      max_rel = std::max(max_rel, std::abs(a - numeric) / denom);
    }
  }
  return max_rel;
}

}  // namespace legnn
