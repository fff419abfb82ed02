#include "ads/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <type_traits>

namespace ads {

namespace {

template <class F>
void dispatch(Dtype dt, F&& f) {
  if (dt == Dtype::F32) {
    f(std::type_identity<float>{});
  } else {
    f(std::type_identity<double>{});
  }
}

void check_same(const Tensor& a, const Tensor& b, const char* op) {
  if (a.dtype() != b.dtype()) {
    throw UsageError(std::string(op) + ": dtype mismatch");
  }
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " +
                     shape_to_string(a.shape()) + " vs " +
                     shape_to_string(b.shape()));
  }
}

bool want_grad(std::initializer_list<const Tensor*> ins) {
  if (!Tape::recording()) return false;
  for (const Tensor* t : ins) {
    if (t->requires_grad()) return true;
  }
  return false;
}

// C(m,n) = op(A) * op(B) with op controlled by ta/tb. Stored dims:
// A is (ta ? k x m : m x k), B is (tb ? n x k : k x n). Accumulates into C
// when acc is set, otherwise overwrites.
template <class T>
void gemm(bool ta, bool tb, int64_t m, int64_t n, int64_t k, const T* a,
          const T* b, T* c, bool acc) {
  if (!acc) {
    std::fill(c, c + m * n, T{0});
  }
  if (!ta && !tb) {
    for (int64_t i = 0; i < m; ++i) {
      T* crow = c + i * n;
      for (int64_t p = 0; p < k; ++p) {
        const T av = a[i * k + p];
        const T* brow = b + p * n;
        for (int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
      }
    }
  } else if (!ta && tb) {
    for (int64_t i = 0; i < m; ++i) {
      const T* arow = a + i * k;
      T* crow = c + i * n;
      for (int64_t j = 0; j < n; ++j) {
        const T* brow = b + j * k;
        T acc_v{0};
        for (int64_t p = 0; p < k; ++p) acc_v += arow[p] * brow[p];
        crow[j] += acc_v;
      }
    }
  } else if (ta && !tb) {
    for (int64_t p = 0; p < k; ++p) {
      const T* arow = a + p * m;
      const T* brow = b + p * n;
      for (int64_t i = 0; i < m; ++i) {
        const T av = arow[i];
        T* crow = c + i * n;
        for (int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
      }
    }
  } else {
    for (int64_t i = 0; i < m; ++i) {
      for (int64_t j = 0; j < n; ++j) {
        T acc_v{0};
        for (int64_t p = 0; p < k; ++p) acc_v += a[p * m + i] * b[j * k + p];
        c[i * n + j] += acc_v;
      }
    }
  }
}

template <class T>
void axpy(std::span<T> y, double alpha, std::span<const T> x) {
  const T a = static_cast<T>(alpha);
  for (size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

// Elementwise unary op with pointwise derivative factor.
template <class Fwd, class Bwd>
Tensor pointwise(const Tensor& a, const char* name, Fwd fwd, Bwd bwd) {
  const bool rg = want_grad({&a});
  Tensor out = Tensor::zeros(a.shape(), a.dtype(), rg);
  dispatch(a.dtype(), [&](auto tag) {
    using T = typename decltype(tag)::type;
    auto in = a.data<T>();
    auto o = out.data_mut<T>();
    for (size_t i = 0; i < in.size(); ++i) {
      o[i] = static_cast<T>(fwd(static_cast<double>(in[i])));
    }
  });
  if (rg) {
    Tape::current().record(name, {a}, out, [a, out, bwd]() mutable {
      const Tensor g = out.grad();
      Tensor ga = a.materialized_grad();
      dispatch(a.dtype(), [&](auto tag) {
        using T = typename decltype(tag)::type;
        auto in = a.data<T>();
        auto gs = g.data<T>();
        auto gd = ga.data_mut<T>();
        for (size_t i = 0; i < in.size(); ++i) {
          gd[i] += static_cast<T>(bwd(static_cast<double>(in[i])) *
                                  static_cast<double>(gs[i]));
        }
      });
    });
  }
  return out;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  check_same(a, b, "add");
  const bool rg = want_grad({&a, &b});
  Tensor out = Tensor::zeros(a.shape(), a.dtype(), rg);
  dispatch(a.dtype(), [&](auto tag) {
    using T = typename decltype(tag)::type;
    auto av = a.data<T>();
    auto bv = b.data<T>();
    auto o = out.data_mut<T>();
    for (size_t i = 0; i < o.size(); ++i) o[i] = av[i] + bv[i];
  });
  if (rg) {
    Tape::current().record("add", {a, b}, out, [a, b, out]() mutable {
      const Tensor g = out.grad();
      dispatch(a.dtype(), [&](auto tag) {
        using T = typename decltype(tag)::type;
        auto gs = g.data<T>();
        if (a.requires_grad()) axpy(a.materialized_grad().data_mut<T>(), 1.0, gs);
        if (b.requires_grad()) axpy(b.materialized_grad().data_mut<T>(), 1.0, gs);
      });
    });
  }
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same(a, b, "sub");
  const bool rg = want_grad({&a, &b});
  Tensor out = Tensor::zeros(a.shape(), a.dtype(), rg);
  dispatch(a.dtype(), [&](auto tag) {
    using T = typename decltype(tag)::type;
    auto av = a.data<T>();
    auto bv = b.data<T>();
    auto o = out.data_mut<T>();
    for (size_t i = 0; i < o.size(); ++i) o[i] = av[i] - bv[i];
  });
  if (rg) {
    Tape::current().record("sub", {a, b}, out, [a, b, out]() mutable {
      const Tensor g = out.grad();
      dispatch(a.dtype(), [&](auto tag) {
        using T = typename decltype(tag)::type;
        auto gs = g.data<T>();
        if (a.requires_grad()) axpy(a.materialized_grad().data_mut<T>(), 1.0, gs);
        if (b.requires_grad()) axpy(b.materialized_grad().data_mut<T>(), -1.0, gs);
      });
    });
  }
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same(a, b, "mul");
  const bool rg = want_grad({&a, &b});
  Tensor out = Tensor::zeros(a.shape(), a.dtype(), rg);
  dispatch(a.dtype(), [&](auto tag) {
    using T = typename decltype(tag)::type;
    auto av = a.data<T>();
    auto bv = b.data<T>();
    auto o = out.data_mut<T>();
    for (size_t i = 0; i < o.size(); ++i) o[i] = av[i] * bv[i];
  });
  if (rg) {
    Tape::current().record("mul", {a, b}, out, [a, b, out]() mutable {
      const Tensor g = out.grad();
      dispatch(a.dtype(), [&](auto tag) {
        using T = typename decltype(tag)::type;
        auto gs = g.data<T>();
        auto av = a.data<T>();
        auto bv = b.data<T>();
        if (a.requires_grad()) {
          auto gd = a.materialized_grad().data_mut<T>();
          for (size_t i = 0; i < gd.size(); ++i) gd[i] += gs[i] * bv[i];
        }
        if (b.requires_grad()) {
          auto gd = b.materialized_grad().data_mut<T>();
          for (size_t i = 0; i < gd.size(); ++i) gd[i] += gs[i] * av[i];
        }
      });
    });
  }
  return out;
}

Tensor scale(const Tensor& a, double c) {
  return pointwise(
      a, "scale", [c](double x) { return c * x; }, [c](double) { return c; });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.dtype() != b.dtype()) throw UsageError("matmul: dtype mismatch");
  if (a.rank() > 2 || b.rank() > 2 || a.cols() != b.rows()) {
    throw ShapeError("matmul: inner dimensions disagree, " +
                     shape_to_string(a.shape()) + " x " +
                     shape_to_string(b.shape()));
  }
  const int64_t r = a.rows(), k = a.cols(), c = b.cols();
  const bool rg = want_grad({&a, &b});
  Tensor out = Tensor::zeros({r, c}, a.dtype(), rg);
  dispatch(a.dtype(), [&](auto tag) {
    using T = typename decltype(tag)::type;
    gemm<T>(false, false, r, c, k, a.data<T>().data(), b.data<T>().data(),
            out.data_mut<T>().data(), false);
  });
  if (rg) {
    Tape::current().record("matmul", {a, b}, out, [a, b, out, r, k, c]() mutable {
      const Tensor g = out.grad();
      dispatch(a.dtype(), [&](auto tag) {
        using T = typename decltype(tag)::type;
        auto gs = g.data<T>();
        if (a.requires_grad()) {
          gemm<T>(false, true, r, k, c, gs.data(), b.data<T>().data(),
                  a.materialized_grad().data_mut<T>().data(), true);
        }
        if (b.requires_grad()) {
          gemm<T>(true, false, k, c, r, a.data<T>().data(), gs.data(),
                  b.materialized_grad().data_mut<T>().data(), true);
        }
      });
    });
  }
  return out;
}

Tensor transpose(const Tensor& a) {
  const int64_t r = a.rows(), c = a.cols();
  const bool rg = want_grad({&a});
  Tensor out = Tensor::zeros({c, r}, a.dtype(), rg);
  dispatch(a.dtype(), [&](auto tag) {
    using T = typename decltype(tag)::type;
    auto in = a.data<T>();
    auto o = out.data_mut<T>();
    for (int64_t i = 0; i < r; ++i) {
      for (int64_t j = 0; j < c; ++j) o[j * r + i] = in[i * c + j];
    }
  });
  if (rg) {
    Tape::current().record("transpose", {a}, out, [a, out, r, c]() mutable {
      const Tensor g = out.grad();
      if (!a.requires_grad()) return;
      Tensor ga = a.materialized_grad();
      dispatch(a.dtype(), [&](auto tag) {
        using T = typename decltype(tag)::type;
        auto gs = g.data<T>();
        auto gd = ga.data_mut<T>();
        for (int64_t i = 0; i < r; ++i) {
          for (int64_t j = 0; j < c; ++j) gd[i * c + j] += gs[j * r + i];
        }
      });
    });
  }
  return out;
}

Tensor relu(const Tensor& a) {
  return pointwise(
      a, "relu", [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor gelu(const Tensor& a) {
  constexpr double inv_sqrt2 = std::numbers::sqrt2 / 2.0;
  constexpr double inv_sqrt_2pi = 0.3989422804014326779399;
  return pointwise(
      a, "gelu",
      [=](double x) { return 0.5 * x * (1.0 + std::erf(x * inv_sqrt2)); },
      [=](double x) {
        return 0.5 * (1.0 + std::erf(x * inv_sqrt2)) +
               x * inv_sqrt_2pi * std::exp(-0.5 * x * x);
      });
}

Tensor softmax(const Tensor& a, int axis) {
  if (a.rank() > 2) throw ShapeError("softmax: rank must be <= 2");
  if (axis != 0 && axis != 1) {
    throw UsageError("softmax: axis must be 0 or 1, got " + std::to_string(axis));
  }
  const int64_t r = a.rows(), c = a.cols();
  for (int64_t i = 0; i < a.numel(); ++i) {
    if (!std::isfinite(a.value_at(i))) {
      throw NumericError("softmax: non-finite input");
    }
  }
  const bool rg = want_grad({&a});
  Tensor out = Tensor::zeros(a.shape(), a.dtype(), rg);
  // Slices run along the chosen axis: axis 1 normalizes each row.
  const int64_t slices = axis == 1 ? r : c;
  const int64_t len = axis == 1 ? c : r;
  const int64_t stride = axis == 1 ? 1 : c;
  const int64_t slice_step = axis == 1 ? c : 1;
  dispatch(a.dtype(), [&](auto tag) {
    using T = typename decltype(tag)::type;
    auto in = a.data<T>();
    auto o = out.data_mut<T>();
    for (int64_t s = 0; s < slices; ++s) {
      const T* x = in.data() + s * slice_step;
      T* y = o.data() + s * slice_step;
      double mx = -std::numeric_limits<double>::infinity();
      for (int64_t i = 0; i < len; ++i) {
        mx = std::max(mx, static_cast<double>(x[i * stride]));
      }
      double total = 0.0;
      for (int64_t i = 0; i < len; ++i) {
        const double e = std::exp(static_cast<double>(x[i * stride]) - mx);
        y[i * stride] = static_cast<T>(e);
        total += e;
      }
      for (int64_t i = 0; i < len; ++i) {
        y[i * stride] = static_cast<T>(static_cast<double>(y[i * stride]) / total);
      }
    }
  });
  if (rg) {
    Tape::current().record(
        "softmax", {a}, out,
        [a, out, slices, len, stride, slice_step]() mutable {
          const Tensor g = out.grad();
          if (!a.requires_grad()) return;
          Tensor ga = a.materialized_grad();
          dispatch(a.dtype(), [&](auto tag) {
            using T = typename decltype(tag)::type;
            auto y = out.data<T>();
            auto gs = g.data<T>();
            auto gd = ga.data_mut<T>();
            for (int64_t s = 0; s < slices; ++s) {
              const T* ys = y.data() + s * slice_step;
              const T* gg = gs.data() + s * slice_step;
              T* gx = gd.data() + s * slice_step;
              double dot = 0.0;
              for (int64_t i = 0; i < len; ++i) {
                dot += static_cast<double>(gg[i * stride]) *
                       static_cast<double>(ys[i * stride]);
              }
              for (int64_t i = 0; i < len; ++i) {
                gx[i * stride] += static_cast<T>(
                    static_cast<double>(ys[i * stride]) *
                    (static_cast<double>(gg[i * stride]) - dot));
              }
            }
          });
        });
  }
  return out;
}

Tensor layernorm(const Tensor& x, const Tensor& gain, const Tensor& bias) {
  const int64_t r = x.rows(), c = x.cols();
  if (gain.numel() != c || bias.numel() != c) {
    throw ShapeError("layernorm: gain/bias length " +
                     std::to_string(gain.numel()) + "/" +
                     std::to_string(bias.numel()) + " does not match width " +
                     std::to_string(c));
  }
  const bool rg = want_grad({&x, &gain, &bias});
  Tensor out = Tensor::zeros(x.shape(), x.dtype(), rg);
  // xhat is saved for backward; stored detached.
  Tensor xhat = Tensor::zeros(x.shape(), x.dtype(), false);
  Tensor inv_std = Tensor::zeros({r}, Dtype::F64, false);
  dispatch(x.dtype(), [&](auto tag) {
    using T = typename decltype(tag)::type;
    auto in = x.data<T>();
    auto gv = gain.data<T>();
    auto bv = bias.data<T>();
    auto o = out.data_mut<T>();
    auto xh = xhat.data_mut<T>();
    auto inv = inv_std.data_mut<double>();
    for (int64_t i = 0; i < r; ++i) {
      const T* row = in.data() + i * c;
      double mu = 0.0;
      for (int64_t j = 0; j < c; ++j) mu += row[j];
      mu /= c;
      double var = 0.0;
      for (int64_t j = 0; j < c; ++j) {
        const double d = row[j] - mu;
        var += d * d;
      }
      var /= c;
      const double is = 1.0 / std::sqrt(var + kLayerNormEps);
      inv[i] = is;
      for (int64_t j = 0; j < c; ++j) {
        const double h = (row[j] - mu) * is;
        xh[i * c + j] = static_cast<T>(h);
        o[i * c + j] = static_cast<T>(h * gv[j] + bv[j]);
      }
    }
  });
  if (rg) {
    Tape::current().record(
        "layernorm", {x, gain, bias}, out,
        [x, gain, bias, out, xhat, inv_std, r, c]() mutable {
          const Tensor g = out.grad();
          dispatch(x.dtype(), [&](auto tag) {
            using T = typename decltype(tag)::type;
            auto gs = g.data<T>();
            auto xh = xhat.data<T>();
            auto gv = gain.data<T>();
            auto inv = inv_std.data<double>();
            if (gain.requires_grad()) {
              auto gd = gain.materialized_grad().data_mut<T>();
              for (int64_t i = 0; i < r; ++i) {
                for (int64_t j = 0; j < c; ++j) {
                  gd[j] += gs[i * c + j] * xh[i * c + j];
                }
              }
            }
            if (bias.requires_grad()) {
              auto gd = bias.materialized_grad().data_mut<T>();
              for (int64_t i = 0; i < r; ++i) {
                for (int64_t j = 0; j < c; ++j) gd[j] += gs[i * c + j];
              }
            }
            if (x.requires_grad()) {
              auto gd = x.materialized_grad().data_mut<T>();
              for (int64_t i = 0; i < r; ++i) {
                double mean_dxhat = 0.0, mean_dxhat_xhat = 0.0;
                for (int64_t j = 0; j < c; ++j) {
                  const double dxh = static_cast<double>(gs[i * c + j]) * gv[j];
                  mean_dxhat += dxh;
                  mean_dxhat_xhat += dxh * xh[i * c + j];
                }
                mean_dxhat /= c;
                mean_dxhat_xhat /= c;
                for (int64_t j = 0; j < c; ++j) {
                  const double dxh = static_cast<double>(gs[i * c + j]) * gv[j];
                  gd[i * c + j] += static_cast<T>(
                      inv[i] * (dxh - mean_dxhat -
                                xh[i * c + j] * mean_dxhat_xhat));
                }
              }
            }
          });
        });
  }
  return out;
}

Tensor add_rowvec(const Tensor& x, const Tensor& v) {
  const int64_t r = x.rows(), c = x.cols();
  if (x.dtype() != v.dtype()) throw UsageError("add_rowvec: dtype mismatch");
  if (v.numel() != c) {
    throw ShapeError("add_rowvec: vector length " + std::to_string(v.numel()) +
                     " does not match width " + std::to_string(c));
  }
  const bool rg = want_grad({&x, &v});
  Tensor out = Tensor::zeros(x.shape(), x.dtype(), rg);
  dispatch(x.dtype(), [&](auto tag) {
    using T = typename decltype(tag)::type;
    auto in = x.data<T>();
    auto vv = v.data<T>();
    auto o = out.data_mut<T>();
    for (int64_t i = 0; i < r; ++i) {
      for (int64_t j = 0; j < c; ++j) o[i * c + j] = in[i * c + j] + vv[j];
    }
  });
  if (rg) {
    Tape::current().record("add_rowvec", {x, v}, out, [x, v, out, r, c]() mutable {
      const Tensor g = out.grad();
      dispatch(x.dtype(), [&](auto tag) {
        using T = typename decltype(tag)::type;
        auto gs = g.data<T>();
        if (x.requires_grad()) axpy(x.materialized_grad().data_mut<T>(), 1.0, gs);
        if (v.requires_grad()) {
          auto gd = v.materialized_grad().data_mut<T>();
          for (int64_t i = 0; i < r; ++i) {
            for (int64_t j = 0; j < c; ++j) gd[j] += gs[i * c + j];
          }
        }
      });
    });
  }
  return out;
}

Tensor add_at_row(const Tensor& x, int64_t row, const Tensor& v) {
  const int64_t r = x.rows(), c = x.cols();
  if (row < 0 || row >= r) {
    throw UsageError("add_at_row: row " + std::to_string(row) +
                     " out of range for " + std::to_string(r) + " rows");
  }
  if (v.numel() != c) {
    throw ShapeError("add_at_row: vector length " + std::to_string(v.numel()) +
                     " does not match width " + std::to_string(c));
  }
  const bool rg = want_grad({&x, &v});
  Tensor out = Tensor::zeros(x.shape(), x.dtype(), rg);
  dispatch(x.dtype(), [&](auto tag) {
    using T = typename decltype(tag)::type;
    auto in = x.data<T>();
    auto vv = v.data<T>();
    auto o = out.data_mut<T>();
    std::copy(in.begin(), in.end(), o.begin());
    for (int64_t j = 0; j < c; ++j) o[row * c + j] += vv[j];
  });
  if (rg) {
    Tape::current().record("add_at_row", {x, v}, out, [x, v, out, row, c]() mutable {
      const Tensor g = out.grad();
      dispatch(x.dtype(), [&](auto tag) {
        using T = typename decltype(tag)::type;
        auto gs = g.data<T>();
        if (x.requires_grad()) axpy(x.materialized_grad().data_mut<T>(), 1.0, gs);
        if (v.requires_grad()) {
          auto gd = v.materialized_grad().data_mut<T>();
          for (int64_t j = 0; j < c; ++j) gd[j] += gs[row * c + j];
        }
      });
    });
  }
  return out;
}

Tensor embed_rows(const Tensor& table, std::span<const int64_t> ids) {
  const int64_t v = table.rows(), c = table.cols();
  for (const int64_t id : ids) {
    if (id < 0 || id >= v) {
      throw InputError("embed_rows: id " + std::to_string(id) +
                       " out of range for table with " + std::to_string(v) +
                       " rows");
    }
  }
  const int64_t n = static_cast<int64_t>(ids.size());
  const bool rg = want_grad({&table});
  Tensor out = Tensor::zeros({n, c}, table.dtype(), rg);
  std::vector<int64_t> ids_copy(ids.begin(), ids.end());
  dispatch(table.dtype(), [&](auto tag) {
    using T = typename decltype(tag)::type;
    auto in = table.data<T>();
    auto o = out.data_mut<T>();
    for (int64_t i = 0; i < n; ++i) {
      std::copy_n(in.data() + ids_copy[i] * c, c, o.data() + i * c);
    }
  });
  if (rg) {
    Tape::current().record(
        "embed_rows", {table}, out, [table, out, ids_copy, c]() mutable {
          const Tensor g = out.grad();
          if (!table.requires_grad()) return;
          Tensor gt = table.materialized_grad();
          dispatch(table.dtype(), [&](auto tag) {
            using T = typename decltype(tag)::type;
            auto gs = g.data<T>();
            auto gd = gt.data_mut<T>();
            for (size_t i = 0; i < ids_copy.size(); ++i) {
              for (int64_t j = 0; j < c; ++j) {
                gd[ids_copy[i] * c + j] += gs[i * c + j];
              }
            }
          });
        });
  }
  return out;
}

Tensor slice_rows(const Tensor& x, int64_t start, int64_t count) {
  const int64_t r = x.rows(), c = x.cols();
  if (start < 0 || count <= 0 || start + count > r) {
    throw ShapeError("slice_rows: range [" + std::to_string(start) + "," +
                     std::to_string(start + count) + ") out of " +
                     std::to_string(r) + " rows");
  }
  const bool rg = want_grad({&x});
  Tensor out = Tensor::zeros({count, c}, x.dtype(), rg);
  dispatch(x.dtype(), [&](auto tag) {
    using T = typename decltype(tag)::type;
    auto in = x.data<T>();
    auto o = out.data_mut<T>();
    std::copy_n(in.data() + start * c, count * c, o.data());
  });
  if (rg) {
    Tape::current().record("slice_rows", {x}, out, [x, out, start, c]() mutable {
      const Tensor g = out.grad();
      if (!x.requires_grad()) return;
      Tensor gx = x.materialized_grad();
      dispatch(x.dtype(), [&](auto tag) {
        using T = typename decltype(tag)::type;
        auto gs = g.data<T>();
        auto gd = gx.data_mut<T>();
        for (size_t i = 0; i < gs.size(); ++i) gd[start * c + i] += gs[i];
      });
    });
  }
  return out;
}

Tensor slice_cols(const Tensor& x, int64_t start, int64_t count) {
  const int64_t r = x.rows(), c = x.cols();
  if (start < 0 || count <= 0 || start + count > c) {
    throw ShapeError("slice_cols: range [" + std::to_string(start) + "," +
                     std::to_string(start + count) + ") out of " +
                     std::to_string(c) + " cols");
  }
  const bool rg = want_grad({&x});
  Tensor out = Tensor::zeros({r, count}, x.dtype(), rg);
  dispatch(x.dtype(), [&](auto tag) {
    using T = typename decltype(tag)::type;
    auto in = x.data<T>();
    auto o = out.data_mut<T>();
    for (int64_t i = 0; i < r; ++i) {
      std::copy_n(in.data() + i * c + start, count, o.data() + i * count);
    }
  });
  if (rg) {
    Tape::current().record(
        "slice_cols", {x}, out, [x, out, start, count, r, c]() mutable {
          const Tensor g = out.grad();
          if (!x.requires_grad()) return;
          Tensor gx = x.materialized_grad();
          dispatch(x.dtype(), [&](auto tag) {
            using T = typename decltype(tag)::type;
            auto gs = g.data<T>();
            auto gd = gx.data_mut<T>();
            for (int64_t i = 0; i < r; ++i) {
              for (int64_t j = 0; j < count; ++j) {
                gd[i * c + start + j] += gs[i * count + j];
              }
            }
          });
        });
  }
  return out;
}

Tensor concat_rows(std::span<const Tensor> parts) {
  if (parts.empty()) throw UsageError("concat_rows: no inputs");
  const int64_t c = parts[0].cols();
  int64_t total = 0;
  bool rg = false;
  for (const Tensor& p : parts) {
    if (p.cols() != c || p.dtype() != parts[0].dtype()) {
      throw ShapeError("concat_rows: parts disagree on width or dtype");
    }
    total += p.rows();
    rg = rg || p.requires_grad();
  }
  rg = rg && Tape::recording();
  Tensor out = Tensor::zeros({total, c}, parts[0].dtype(), rg);
  std::vector<Tensor> inputs(parts.begin(), parts.end());
  dispatch(out.dtype(), [&](auto tag) {
    using T = typename decltype(tag)::type;
    auto o = out.data_mut<T>();
    int64_t row = 0;
    for (const Tensor& p : parts) {
      auto in = p.data<T>();
      std::copy(in.begin(), in.end(), o.begin() + row * c);
      row += p.rows();
    }
  });
  if (rg) {
    Tape::current().record("concat_rows", inputs, out, [inputs, out, c]() mutable {
      const Tensor g = out.grad();
      dispatch(out.dtype(), [&](auto tag) {
        using T = typename decltype(tag)::type;
        auto gs = g.data<T>();
        int64_t row = 0;
        for (Tensor& p : inputs) {
          if (p.requires_grad()) {
            auto gd = p.materialized_grad().data_mut<T>();
            for (size_t i = 0; i < gd.size(); ++i) gd[i] += gs[row * c + i];
          }
          row += p.rows();
        }
      });
    });
  }
  return out;
}

Tensor concat_cols(std::span<const Tensor> parts) {
  if (parts.empty()) throw UsageError("concat_cols: no inputs");
  const int64_t r = parts[0].rows();
  int64_t total = 0;
  bool rg = false;
  for (const Tensor& p : parts) {
    if (p.rows() != r || p.dtype() != parts[0].dtype()) {
      throw ShapeError("concat_cols: parts disagree on rows or dtype");
    }
    total += p.cols();
    rg = rg || p.requires_grad();
  }
  rg = rg && Tape::recording();
  Tensor out = Tensor::zeros({r, total}, parts[0].dtype(), rg);
  std::vector<Tensor> inputs(parts.begin(), parts.end());
  dispatch(out.dtype(), [&](auto tag) {
    using T = typename decltype(tag)::type;
    auto o = out.data_mut<T>();
    int64_t col = 0;
    for (const Tensor& p : parts) {
      auto in = p.data<T>();
      const int64_t pc = p.cols();
      for (int64_t i = 0; i < r; ++i) {
        std::copy_n(in.data() + i * pc, pc, o.data() + i * total + col);
      }
      col += pc;
    }
  });
  if (rg) {
    Tape::current().record(
        "concat_cols", inputs, out, [inputs, out, r, total]() mutable {
          const Tensor g = out.grad();
          dispatch(out.dtype(), [&](auto tag) {
            using T = typename decltype(tag)::type;
            auto gs = g.data<T>();
            int64_t col = 0;
            for (Tensor& p : inputs) {
              const int64_t pc = p.cols();
              if (p.requires_grad()) {
                auto gd = p.materialized_grad().data_mut<T>();
                for (int64_t i = 0; i < r; ++i) {
                  for (int64_t j = 0; j < pc; ++j) {
                    gd[i * pc + j] += gs[i * total + col + j];
                  }
                }
              }
              col += pc;
            }
          });
        });
  }
  return out;
}

Tensor sum(const Tensor& x) {
  const bool rg = want_grad({&x});
  Tensor out = Tensor::zeros({1}, x.dtype(), rg);
  double total = 0.0;
  for (int64_t i = 0; i < x.numel(); ++i) total += x.value_at(i);
  out.set_value_at(0, total);
  if (rg) {
    Tape::current().record("sum", {x}, out, [x, out]() mutable {
      const double g = out.grad().value_at(0);
      if (!x.requires_grad()) return;
      Tensor gx = x.materialized_grad();
      for (int64_t i = 0; i < gx.numel(); ++i) {
        gx.set_value_at(i, gx.value_at(i) + g);
      }
    });
  }
  return out;
}

Tensor mean(const Tensor& x) { return scale(sum(x), 1.0 / x.numel()); }

Tensor cross_entropy_logits(const Tensor& logits,
                            std::span<const int64_t> labels) {
  const int64_t b = logits.rows(), c = logits.cols();
  if (static_cast<int64_t>(labels.size()) != b) {
    throw ShapeError("cross_entropy_logits: " + std::to_string(labels.size()) +
                     " labels for " + std::to_string(b) + " rows");
  }
  for (const int64_t l : labels) {
    if (l < 0 || l >= c) {
      throw InputError("cross_entropy_logits: label " + std::to_string(l) +
                       " out of range [0," + std::to_string(c) + ")");
    }
  }
  const bool rg = want_grad({&logits});
  Tensor out = Tensor::zeros({1}, logits.dtype(), rg);
  Tensor probs = Tensor::zeros(logits.shape(), logits.dtype(), false);
  std::vector<int64_t> lab(labels.begin(), labels.end());
  double loss = 0.0;
  dispatch(logits.dtype(), [&](auto tag) {
    using T = typename decltype(tag)::type;
    auto in = logits.data<T>();
    auto p = probs.data_mut<T>();
    for (int64_t i = 0; i < b; ++i) {
      const T* row = in.data() + i * c;
      double mx = -std::numeric_limits<double>::infinity();
      for (int64_t j = 0; j < c; ++j) mx = std::max(mx, static_cast<double>(row[j]));
      double total = 0.0;
      for (int64_t j = 0; j < c; ++j) total += std::exp(row[j] - mx);
      const double lse = mx + std::log(total);
      loss += lse - row[lab[i]];
      for (int64_t j = 0; j < c; ++j) {
        p[i * c + j] = static_cast<T>(std::exp(row[j] - lse));
      }
    }
  });
  out.set_value_at(0, loss / b);
  if (rg) {
    Tape::current().record(
        "cross_entropy_logits", {logits}, out,
        [logits, out, probs, lab, b, c]() mutable {
          const double g = out.grad().value_at(0);
          if (!logits.requires_grad()) return;
          Tensor gl = logits.materialized_grad();
          dispatch(logits.dtype(), [&](auto tag) {
            using T = typename decltype(tag)::type;
            auto p = probs.data<T>();
            auto gd = gl.data_mut<T>();
            const double inv_b = 1.0 / b;
            for (int64_t i = 0; i < b; ++i) {
              for (int64_t j = 0; j < c; ++j) {
                const double onehot = (j == lab[i]) ? 1.0 : 0.0;
                gd[i * c + j] += static_cast<T>(
                    g * inv_b * (static_cast<double>(p[i * c + j]) - onehot));
              }
            }
          });
        });
  }
  return out;
}

Tensor l2normalize_rows(const Tensor& x) {
  const int64_t r = x.rows(), c = x.cols();
  constexpr double kFloor = 1e-12;
  const bool rg = want_grad({&x});
  Tensor out = Tensor::zeros(x.shape(), x.dtype(), rg);
  Tensor norms = Tensor::zeros({r}, Dtype::F64, false);
  dispatch(x.dtype(), [&](auto tag) {
    using T = typename decltype(tag)::type;
    auto in = x.data<T>();
    auto o = out.data_mut<T>();
    auto nv = norms.data_mut<double>();
    for (int64_t i = 0; i < r; ++i) {
      double ss = 0.0;
      for (int64_t j = 0; j < c; ++j) {
        ss += static_cast<double>(in[i * c + j]) * in[i * c + j];
      }
      const double n = std::max(std::sqrt(ss), kFloor);
      nv[i] = n;
      for (int64_t j = 0; j < c; ++j) {
        o[i * c + j] = static_cast<T>(in[i * c + j] / n);
      }
    }
  });
  if (rg) {
    Tape::current().record(
        "l2normalize_rows", {x}, out, [x, out, norms, r, c]() mutable {
          const Tensor g = out.grad();
          if (!x.requires_grad()) return;
          Tensor gx = x.materialized_grad();
          dispatch(x.dtype(), [&](auto tag) {
            using T = typename decltype(tag)::type;
            auto y = out.data<T>();
            auto gs = g.data<T>();
            auto nv = norms.data<double>();
            auto gd = gx.data_mut<T>();
            for (int64_t i = 0; i < r; ++i) {
              double dot = 0.0;
              for (int64_t j = 0; j < c; ++j) {
                dot += static_cast<double>(gs[i * c + j]) * y[i * c + j];
              }
              for (int64_t j = 0; j < c; ++j) {
                gd[i * c + j] += static_cast<T>(
                    (static_cast<double>(gs[i * c + j]) - y[i * c + j] * dot) /
                    nv[i]);
              }
            }
          });
        });
  }
  return out;
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
  return add_rowvec(matmul(x, w), b);
}

}  // namespace ads
