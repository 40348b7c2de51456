// Copyright 2026 The sscse Authors
// SPDX-License-Identifier: Apache-2.0

#include "sscse/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "sscse/errors.hpp"

namespace sscse {

namespace {

void accumulate(Tensor t, std::span<const double> g) {
    if (!t.requires_grad()) return;
    auto dst = t.mutable_grad();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += g[i];
}

std::size_t last_dim(const Tensor& a, const char* op) {
    if (a.rank() == 0) throw DimensionError(std::string(op) + ": rank-0 tensor");
    return a.shape().back();
}

Shape drop_last(const Shape& s) {
    if (s.size() <= 1) return {1};
    return Shape(s.begin(), s.end() - 1);
}

bool is_suffix(const Shape& full, const Shape& suffix) {
    if (suffix.size() > full.size()) return false;
    return std::equal(suffix.rbegin(), suffix.rend(), full.rbegin());
}

constexpr double kGeluC = 0.7978845608028654;  // sqrt(2 / pi)
constexpr double kGeluA = 0.044715;

double gelu_value(double x) {
    const double u = kGeluC * (x + kGeluA * x * x * x);
    return 0.5 * x * (1.0 + std::tanh(u));
}

double gelu_derivative(double x) {
    const double u = kGeluC * (x + kGeluA * x * x * x);
    const double t = std::tanh(u);
    const double du = kGeluC * (1.0 + 3.0 * kGeluA * x * x);
    return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du;
}

}  // namespace

Tensor Graph::record(const std::vector<const Tensor*>& inputs, Shape shape, std::vector<double> values,
                     const std::function<BackwardFn(const Tensor& out)>& make_backward) {
    Tensor out = Tensor::from(std::move(shape), std::move(values));
    if (mode_ == Mode::no_grad) return out;
    const bool needs_grad =
        std::any_of(inputs.begin(), inputs.end(), [](const Tensor* t) { return t->requires_grad(); });
    if (!needs_grad) return out;
    if (backward_done_) throw StateError("graph already ran backward; reset() before recording new operations");
    out.impl().requires_grad = true;
    out.impl().node_id = next_id_++;
    out.impl().graph = this;
    tape_.push_back(Node{out, make_backward(out)});
    return out;
}

Tensor Graph::custom(std::vector<Tensor> inputs, Shape shape, std::vector<double> values, BackwardFn backward) {
    std::vector<const Tensor*> ptrs;
    for (const auto& t : inputs) ptrs.push_back(&t);
    return record(ptrs, std::move(shape), std::move(values),
                  [&](const Tensor&) { return std::move(backward); });
}

Tensor Graph::matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() < 2 || b.rank() != 2 || a.shape().back() != b.dim(0)) {
        throw DimensionError("matmul: cannot multiply " + shape_to_string(a.shape()) + " by " +
                             shape_to_string(b.shape()));
    }
    const std::size_t k = b.dim(0), n = b.dim(1), m = a.numel() / k;
    Shape shape = drop_last(a.shape());
    shape.push_back(n);
    std::vector<double> out(m * n, 0.0);
    const auto A = a.data();
    const auto B = b.data();
    for (std::size_t i = 0; i < m; ++i) {
        double* row = out.data() + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = A[i * k + p];
            const double* brow = B.data() + p * n;
            for (std::size_t j = 0; j < n; ++j) row[j] += av * brow[j];
        }
    }
    return record({&a, &b}, std::move(shape), std::move(out), [&](const Tensor&) -> BackwardFn {
        return [a, b, m, k, n](std::span<const double> g) {
            const auto A = a.data();
            const auto B = b.data();
            if (a.requires_grad()) {
                auto da = Tensor(a).mutable_grad();
                for (std::size_t i = 0; i < m; ++i) {
                    for (std::size_t p = 0; p < k; ++p) {
                        double acc = 0.0;
                        for (std::size_t j = 0; j < n; ++j) acc += g[i * n + j] * B[p * n + j];
                        da[i * k + p] += acc;
                    }
                }
            }
            if (b.requires_grad()) {
                auto db = Tensor(b).mutable_grad();
                for (std::size_t i = 0; i < m; ++i) {
                    for (std::size_t p = 0; p < k; ++p) {
                        const double av = A[i * k + p];
                        for (std::size_t j = 0; j < n; ++j) db[p * n + j] += av * g[i * n + j];
                    }
                }
            }
        };
    });
}

Tensor Graph::elementwise(ElementwiseKind kind, const Tensor& a, const Tensor& b, double constant) {
    const bool binary = kind == ElementwiseKind::add || kind == ElementwiseKind::sub || kind == ElementwiseKind::mul;
    const std::size_t n = a.numel();
    const auto A = a.data();
    std::vector<double> out(n);
    if (!binary) {
        if (kind == ElementwiseKind::scale) {
            for (std::size_t i = 0; i < n; ++i) out[i] = A[i] * constant;
            return record({&a}, a.shape(), std::move(out), [&](const Tensor&) -> BackwardFn {
                return [a, constant](std::span<const double> g) {
                    auto da = Tensor(a).mutable_grad();
                    for (std::size_t i = 0; i < da.size(); ++i) da[i] += g[i] * constant;
                };
            });
        }
        for (std::size_t i = 0; i < n; ++i) out[i] = gelu_value(A[i]);
        return record({&a}, a.shape(), std::move(out), [&](const Tensor&) -> BackwardFn {
            return [a](std::span<const double> g) {
                const auto A = a.data();
                auto da = Tensor(a).mutable_grad();
                for (std::size_t i = 0; i < da.size(); ++i) da[i] += g[i] * gelu_derivative(A[i]);
            };
        });
    }

    if (!b.defined() || !is_suffix(a.shape(), b.shape())) {
        throw DimensionError("elementwise: " + (b.defined() ? shape_to_string(b.shape()) : std::string("<none>")) +
                             " is not broadcastable to " + shape_to_string(a.shape()));
    }
    const auto B = b.data();
    const std::size_t nb = b.numel();
    switch (kind) {
        case ElementwiseKind::add:
            for (std::size_t i = 0; i < n; ++i) out[i] = A[i] + B[i % nb];
            break;
        case ElementwiseKind::sub:
            for (std::size_t i = 0; i < n; ++i) out[i] = A[i] - B[i % nb];
            break;
        default:
            for (std::size_t i = 0; i < n; ++i) out[i] = A[i] * B[i % nb];
            break;
    }
    return record({&a, &b}, a.shape(), std::move(out), [&](const Tensor&) -> BackwardFn {
        return [a, b, kind, nb](std::span<const double> g) {
            const std::size_t n = g.size();
            if (a.requires_grad()) {
                auto da = Tensor(a).mutable_grad();
                if (kind == ElementwiseKind::mul) {
                    const auto B = b.data();
                    for (std::size_t i = 0; i < n; ++i) da[i] += g[i] * B[i % nb];
                } else {
                    for (std::size_t i = 0; i < n; ++i) da[i] += g[i];
                }
            }
            if (b.requires_grad()) {
                auto db = Tensor(b).mutable_grad();
                if (kind == ElementwiseKind::mul) {
                    const auto A = a.data();
                    for (std::size_t i = 0; i < n; ++i) db[i % nb] += g[i] * A[i];
                } else {
                    const double sign = kind == ElementwiseKind::sub ? -1.0 : 1.0;
                    for (std::size_t i = 0; i < n; ++i) db[i % nb] += sign * g[i];
                }
            }
        };
    });
}

Tensor Graph::log(const Tensor& a) {
    const auto A = a.data();
    std::vector<double> out(A.size());
    for (std::size_t i = 0; i < A.size(); ++i) {
        if (!(A[i] > 0.0)) throw ContractError("log of non-positive value");
        out[i] = std::log(A[i]);
    }
    return record({&a}, a.shape(), std::move(out), [&](const Tensor&) -> BackwardFn {
        return [a](std::span<const double> g) {
            const auto A = a.data();
            auto da = Tensor(a).mutable_grad();
            for (std::size_t i = 0; i < da.size(); ++i) da[i] += g[i] / A[i];
        };
    });
}

Tensor Graph::transpose(const Tensor& a) {
    if (a.rank() != 2) throw DimensionError("transpose: expected rank 2, got " + shape_to_string(a.shape()));
    const std::size_t r = a.dim(0), c = a.dim(1);
    const auto A = a.data();
    std::vector<double> out(r * c);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out[j * r + i] = A[i * c + j];
    return record({&a}, {c, r}, std::move(out), [&](const Tensor&) -> BackwardFn {
        return [a, r, c](std::span<const double> g) {
            auto da = Tensor(a).mutable_grad();
            for (std::size_t i = 0; i < r; ++i)
                for (std::size_t j = 0; j < c; ++j) da[i * c + j] += g[j * r + i];
        };
    });
}

Tensor Graph::reshape(const Tensor& a, Shape shape) {
    if (shape_numel(shape) != a.numel()) {
        throw DimensionError("reshape: cannot view " + shape_to_string(a.shape()) + " as " + shape_to_string(shape));
    }
    std::vector<double> out(a.data().begin(), a.data().end());
    return record({&a}, std::move(shape), std::move(out), [&](const Tensor&) -> BackwardFn {
        return [a](std::span<const double> g) { accumulate(a, g); };
    });
}

Tensor Graph::swap_axes12(const Tensor& a) {
    if (a.rank() != 4) throw DimensionError("swap_axes12: expected rank 4, got " + shape_to_string(a.shape()));
    const std::size_t A0 = a.dim(0), B = a.dim(1), C = a.dim(2), D = a.dim(3);
    const auto X = a.data();
    std::vector<double> out(a.numel());
    for (std::size_t i = 0; i < A0; ++i)
        for (std::size_t j = 0; j < B; ++j)
            for (std::size_t k = 0; k < C; ++k)
                for (std::size_t l = 0; l < D; ++l)
                    out[((i * C + k) * B + j) * D + l] = X[((i * B + j) * C + k) * D + l];
    return record({&a}, {A0, C, B, D}, std::move(out), [&](const Tensor&) -> BackwardFn {
        return [a, A0, B, C, D](std::span<const double> g) {
            auto da = Tensor(a).mutable_grad();
            for (std::size_t i = 0; i < A0; ++i)
                for (std::size_t j = 0; j < B; ++j)
                    for (std::size_t k = 0; k < C; ++k)
                        for (std::size_t l = 0; l < D; ++l)
                            da[((i * B + j) * C + k) * D + l] += g[((i * C + k) * B + j) * D + l];
        };
    });
}

Tensor Graph::bmm(const Tensor& a, const Tensor& b, bool transpose_b) {
    const bool ok = a.rank() == 3 && b.rank() == 3 && a.dim(0) == b.dim(0) &&
                    a.dim(2) == (transpose_b ? b.dim(2) : b.dim(1));
    if (!ok) {
        throw DimensionError("bmm: cannot multiply " + shape_to_string(a.shape()) + " by " +
                             shape_to_string(b.shape()) + (transpose_b ? " (transposed)" : ""));
    }
    const std::size_t batch = a.dim(0), m = a.dim(1), k = a.dim(2);
    const std::size_t n = transpose_b ? b.dim(1) : b.dim(2);
    // Element (p, j) of the right operand for batch e.
    auto bidx = [=](std::size_t e, std::size_t p, std::size_t j) {
        return transpose_b ? (e * n + j) * k + p : (e * k + p) * n + j;
    };
    const auto A = a.data();
    const auto Bd = b.data();
    std::vector<double> out(batch * m * n, 0.0);
    for (std::size_t e = 0; e < batch; ++e)
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                double acc = 0.0;
                for (std::size_t p = 0; p < k; ++p) acc += A[(e * m + i) * k + p] * Bd[bidx(e, p, j)];
                out[(e * m + i) * n + j] = acc;
            }
    return record({&a, &b}, {batch, m, n}, std::move(out), [&](const Tensor&) -> BackwardFn {
        return [a, b, batch, m, k, n, bidx](std::span<const double> g) {
            const auto A = a.data();
            const auto Bd = b.data();
            if (a.requires_grad()) {
                auto da = Tensor(a).mutable_grad();
                for (std::size_t e = 0; e < batch; ++e)
                    for (std::size_t i = 0; i < m; ++i)
                        for (std::size_t p = 0; p < k; ++p) {
                            double acc = 0.0;
                            for (std::size_t j = 0; j < n; ++j) acc += g[(e * m + i) * n + j] * Bd[bidx(e, p, j)];
                            da[(e * m + i) * k + p] += acc;
                        }
            }
            if (b.requires_grad()) {
                auto db = Tensor(b).mutable_grad();
                for (std::size_t e = 0; e < batch; ++e)
                    for (std::size_t i = 0; i < m; ++i)
                        for (std::size_t p = 0; p < k; ++p) {
                            const double av = A[(e * m + i) * k + p];
                            for (std::size_t j = 0; j < n; ++j) db[bidx(e, p, j)] += av * g[(e * m + i) * n + j];
                        }
            }
        };
    });
}

Tensor Graph::softmax_rows(const Tensor& a) {
    const std::size_t n = last_dim(a, "softmax_rows");
    const std::size_t rows = a.numel() / n;
    const auto A = a.data();
    std::vector<double> out(a.numel());
    for (std::size_t r = 0; r < rows; ++r) {
        const double* x = A.data() + r * n;
        double* y = out.data() + r * n;
        const double mx = *std::max_element(x, x + n);
        double total = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            y[j] = std::exp(x[j] - mx);
            total += y[j];
        }
        for (std::size_t j = 0; j < n; ++j) y[j] /= total;
    }
    return record({&a}, a.shape(), std::move(out), [&](const Tensor& result) -> BackwardFn {
        return [a, result, rows, n](std::span<const double> g) {
            const auto Y = result.data();
            auto da = Tensor(a).mutable_grad();
            for (std::size_t r = 0; r < rows; ++r) {
                double dot = 0.0;
                for (std::size_t j = 0; j < n; ++j) dot += g[r * n + j] * Y[r * n + j];
                for (std::size_t j = 0; j < n; ++j) da[r * n + j] += Y[r * n + j] * (g[r * n + j] - dot);
            }
        };
    });
}

Tensor Graph::log_softmax_rows(const Tensor& a) {
    const std::size_t n = last_dim(a, "log_softmax_rows");
    const std::size_t rows = a.numel() / n;
    const auto A = a.data();
    std::vector<double> out(a.numel());
    for (std::size_t r = 0; r < rows; ++r) {
        const double* x = A.data() + r * n;
        const double mx = *std::max_element(x, x + n);
        double total = 0.0;
        for (std::size_t j = 0; j < n; ++j) total += std::exp(x[j] - mx);
        const double lse = mx + std::log(total);
        for (std::size_t j = 0; j < n; ++j) out[r * n + j] = x[j] - lse;
    }
    return record({&a}, a.shape(), std::move(out), [&](const Tensor& result) -> BackwardFn {
        return [a, result, rows, n](std::span<const double> g) {
            const auto Y = result.data();
            auto da = Tensor(a).mutable_grad();
            for (std::size_t r = 0; r < rows; ++r) {
                double gsum = 0.0;
                for (std::size_t j = 0; j < n; ++j) gsum += g[r * n + j];
                for (std::size_t j = 0; j < n; ++j) da[r * n + j] += g[r * n + j] - std::exp(Y[r * n + j]) * gsum;
            }
        };
    });
}

Tensor Graph::logsumexp_rows(const Tensor& a) {
    const std::size_t n = last_dim(a, "logsumexp_rows");
    const std::size_t rows = a.numel() / n;
    const auto A = a.data();
    std::vector<double> out(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        const double* x = A.data() + r * n;
        const double mx = *std::max_element(x, x + n);
        double total = 0.0;
        for (std::size_t j = 0; j < n; ++j) total += std::exp(x[j] - mx);
        out[r] = mx + std::log(total);
    }
    return record({&a}, drop_last(a.shape()), std::move(out), [&](const Tensor& result) -> BackwardFn {
        return [a, result, rows, n](std::span<const double> g) {
            const auto A = a.data();
            const auto L = result.data();
            auto da = Tensor(a).mutable_grad();
            for (std::size_t r = 0; r < rows; ++r)
                for (std::size_t j = 0; j < n; ++j) da[r * n + j] += g[r] * std::exp(A[r * n + j] - L[r]);
        };
    });
}

Tensor Graph::layer_norm(const Tensor& a, const Tensor& gain, const Tensor& bias, double eps) {
    const std::size_t d = last_dim(a, "layer_norm");
    if (d < 2) throw ContractError("layer_norm requires a last dimension of at least 2");
    if (!(eps > 0.0)) throw ContractError("layer_norm requires eps > 0");
    if (gain.shape() != Shape{d} || bias.shape() != Shape{d}) {
        throw DimensionError("layer_norm: gain " + shape_to_string(gain.shape()) + " / bias " +
                             shape_to_string(bias.shape()) + " do not match rows of " + shape_to_string(a.shape()));
    }
    const std::size_t rows = a.numel() / d;
    const auto X = a.data();
    const auto G = gain.data();
    const auto Bv = bias.data();
    std::vector<double> out(a.numel());
    std::vector<double> xhat(a.numel());
    std::vector<double> inv_std(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        const double* x = X.data() + r * d;
        double mu = 0.0;
        for (std::size_t j = 0; j < d; ++j) mu += x[j];
        mu /= static_cast<double>(d);
        double var = 0.0;
        for (std::size_t j = 0; j < d; ++j) var += (x[j] - mu) * (x[j] - mu);
        var /= static_cast<double>(d);
        inv_std[r] = 1.0 / std::sqrt(var + eps);
        for (std::size_t j = 0; j < d; ++j) {
            xhat[r * d + j] = (x[j] - mu) * inv_std[r];
            out[r * d + j] = xhat[r * d + j] * G[j] + Bv[j];
        }
    }
    return record({&a, &gain, &bias}, a.shape(), std::move(out), [&](const Tensor&) -> BackwardFn {
        return [a, gain, bias, rows, d, xhat = std::move(xhat), inv_std = std::move(inv_std)](
                   std::span<const double> g) {
            const auto G = gain.data();
            if (gain.requires_grad()) {
                auto dg = Tensor(gain).mutable_grad();
                for (std::size_t r = 0; r < rows; ++r)
                    for (std::size_t j = 0; j < d; ++j) dg[j] += g[r * d + j] * xhat[r * d + j];
            }
            if (bias.requires_grad()) {
                auto db = Tensor(bias).mutable_grad();
                for (std::size_t r = 0; r < rows; ++r)
                    for (std::size_t j = 0; j < d; ++j) db[j] += g[r * d + j];
            }
            if (a.requires_grad()) {
                auto da = Tensor(a).mutable_grad();
                const double inv_d = 1.0 / static_cast<double>(d);
                for (std::size_t r = 0; r < rows; ++r) {
                    double mean_dx = 0.0, mean_dx_xhat = 0.0;
                    for (std::size_t j = 0; j < d; ++j) {
                        const double dxhat = g[r * d + j] * G[j];
                        mean_dx += dxhat;
                        mean_dx_xhat += dxhat * xhat[r * d + j];
                    }
                    mean_dx *= inv_d;
                    mean_dx_xhat *= inv_d;
                    for (std::size_t j = 0; j < d; ++j) {
                        const double dxhat = g[r * d + j] * G[j];
                        da[r * d + j] += inv_std[r] * (dxhat - mean_dx - xhat[r * d + j] * mean_dx_xhat);
                    }
                }
            }
        };
    });
}

Tensor Graph::embedding(const Tensor& table, std::span<const std::int32_t> ids) {
    if (table.rank() != 2) throw DimensionError("embedding: table must be rank 2, got " + shape_to_string(table.shape()));
    if (ids.empty()) throw DimensionError("embedding: no ids");
    const std::size_t vocab = table.dim(0), d = table.dim(1);
    const auto T = table.data();
    std::vector<double> out(ids.size() * d);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= vocab) {
            throw DataError("token id " + std::to_string(ids[i]) + " outside vocabulary of size " +
                            std::to_string(vocab));
        }
        std::copy_n(T.data() + static_cast<std::size_t>(ids[i]) * d, d, out.data() + i * d);
    }
    std::vector<std::int32_t> saved(ids.begin(), ids.end());
    return record({&table}, {ids.size(), d}, std::move(out), [&](const Tensor&) -> BackwardFn {
        return [table, d, saved = std::move(saved)](std::span<const double> g) {
            auto dt = Tensor(table).mutable_grad();
            for (std::size_t i = 0; i < saved.size(); ++i)
                for (std::size_t j = 0; j < d; ++j) dt[static_cast<std::size_t>(saved[i]) * d + j] += g[i * d + j];
        };
    });
}

Tensor Graph::l2_normalize_rows(const Tensor& a) {
    if (a.rank() != 2) throw DimensionError("l2_normalize_rows: expected rank 2, got " + shape_to_string(a.shape()));
    const std::size_t m = a.dim(0), d = a.dim(1);
    const auto X = a.data();
    std::vector<double> out(a.numel());
    std::vector<double> norms(m);
    for (std::size_t i = 0; i < m; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < d; ++j) s += X[i * d + j] * X[i * d + j];
        norms[i] = std::sqrt(s);
        if (norms[i] == 0.0) throw ContractError("cannot normalise zero-norm row " + std::to_string(i));
        for (std::size_t j = 0; j < d; ++j) out[i * d + j] = X[i * d + j] / norms[i];
    }
    return record({&a}, a.shape(), std::move(out), [&](const Tensor& result) -> BackwardFn {
        return [a, result, m, d, norms = std::move(norms)](std::span<const double> g) {
            const auto Y = result.data();
            auto da = Tensor(a).mutable_grad();
            for (std::size_t i = 0; i < m; ++i) {
                double dot = 0.0;
                for (std::size_t j = 0; j < d; ++j) dot += Y[i * d + j] * g[i * d + j];
                for (std::size_t j = 0; j < d; ++j) da[i * d + j] += (g[i * d + j] - Y[i * d + j] * dot) / norms[i];
            }
        };
    });
}

Tensor Graph::rowwise_dot(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || a.shape() != b.shape()) {
        throw DimensionError("rowwise_dot: " + shape_to_string(a.shape()) + " vs " + shape_to_string(b.shape()));
    }
    const std::size_t m = a.dim(0), d = a.dim(1);
    const auto A = a.data();
    const auto B = b.data();
    std::vector<double> out(m, 0.0);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < d; ++j) out[i] += A[i * d + j] * B[i * d + j];
    return record({&a, &b}, {m}, std::move(out), [&](const Tensor&) -> BackwardFn {
        return [a, b, m, d](std::span<const double> g) {
            const auto A = a.data();
            const auto B = b.data();
            if (a.requires_grad()) {
                auto da = Tensor(a).mutable_grad();
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t j = 0; j < d; ++j) da[i * d + j] += g[i] * B[i * d + j];
            }
            if (b.requires_grad()) {
                auto db = Tensor(b).mutable_grad();
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t j = 0; j < d; ++j) db[i * d + j] += g[i] * A[i * d + j];
            }
        };
    });
}

Tensor Graph::diagonal(const Tensor& a) {
    if (a.rank() != 2 || a.dim(0) != a.dim(1)) {
        throw DimensionError("diagonal: expected a square matrix, got " + shape_to_string(a.shape()));
    }
    const std::size_t n = a.dim(0);
    const auto A = a.data();
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = A[i * n + i];
    return record({&a}, {n}, std::move(out), [&](const Tensor&) -> BackwardFn {
        return [a, n](std::span<const double> g) {
            auto da = Tensor(a).mutable_grad();
            for (std::size_t i = 0; i < n; ++i) da[i * n + i] += g[i];
        };
    });
}

Tensor Graph::masked_mean(const Tensor& h, std::span<const std::size_t> lengths) {
    if (h.rank() != 3 || lengths.size() != h.dim(0)) {
        throw DimensionError("masked_mean: hidden " + shape_to_string(h.shape()) + " with " +
                             std::to_string(lengths.size()) + " lengths");
    }
    const std::size_t N = h.dim(0), T = h.dim(1), d = h.dim(2);
    for (std::size_t i = 0; i < N; ++i) {
        if (lengths[i] == 0) throw DataError("sentence " + std::to_string(i) + " has zero length");
        if (lengths[i] > T) throw DataError("sentence length exceeds padded length");
    }
    const auto H = h.data();
    std::vector<double> out(N * d, 0.0);
    for (std::size_t i = 0; i < N; ++i) {
        for (std::size_t t = 0; t < lengths[i]; ++t)
            for (std::size_t j = 0; j < d; ++j) out[i * d + j] += H[(i * T + t) * d + j];
        const double inv = 1.0 / static_cast<double>(lengths[i]);
        for (std::size_t j = 0; j < d; ++j) out[i * d + j] *= inv;
    }
    std::vector<std::size_t> lens(lengths.begin(), lengths.end());
    return record({&h}, {N, d}, std::move(out), [&](const Tensor&) -> BackwardFn {
        return [h, T, d, lens = std::move(lens)](std::span<const double> g) {
            auto dh = Tensor(h).mutable_grad();
            for (std::size_t i = 0; i < lens.size(); ++i) {
                const double inv = 1.0 / static_cast<double>(lens[i]);
                for (std::size_t t = 0; t < lens[i]; ++t)
                    for (std::size_t j = 0; j < d; ++j) dh[(i * T + t) * d + j] += g[i * d + j] * inv;
            }
        };
    });
}

Tensor Graph::select_position(const Tensor& h, std::size_t position) {
    if (h.rank() != 3 || position >= h.dim(1)) {
        throw DimensionError("select_position: position " + std::to_string(position) + " in " +
                             shape_to_string(h.shape()));
    }
    const std::size_t N = h.dim(0), T = h.dim(1), d = h.dim(2);
    const auto H = h.data();
    std::vector<double> out(N * d);
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < d; ++j) out[i * d + j] = H[(i * T + position) * d + j];
    return record({&h}, {N, d}, std::move(out), [&](const Tensor&) -> BackwardFn {
        return [h, N, T, d, position](std::span<const double> g) {
            auto dh = Tensor(h).mutable_grad();
            for (std::size_t i = 0; i < N; ++i)
                for (std::size_t j = 0; j < d; ++j) dh[(i * T + position) * d + j] += g[i * d + j];
        };
    });
}

Tensor Graph::sum(const Tensor& a) {
    double total = 0.0;
    for (double v : a.data()) total += v;
    return record({&a}, {1}, {total}, [&](const Tensor&) -> BackwardFn {
        return [a](std::span<const double> g) {
            auto da = Tensor(a).mutable_grad();
            for (double& v : da) v += g[0];
        };
    });
}

Tensor Graph::mean(const Tensor& a) {
    double total = 0.0;
    for (double v : a.data()) total += v;
    const double inv = 1.0 / static_cast<double>(a.numel());
    return record({&a}, {1}, {total * inv}, [&](const Tensor&) -> BackwardFn {
        return [a, inv](std::span<const double> g) {
            auto da = Tensor(a).mutable_grad();
            for (double& v : da) v += g[0] * inv;
        };
    });
}

void Graph::backward(const Tensor& loss) {
    if (loss.numel() != 1) {
        throw ContractError("backward requires a scalar loss, got shape " + shape_to_string(loss.shape()));
    }
    if (backward_done_) throw StateError("backward already ran on this graph; call reset() first");
    if (loss.graph() != this) throw ContractError("loss was not produced by this graph");
    backward_done_ = true;
    Tensor seed = loss;
    seed.mutable_grad()[0] = 1.0;
    visits_ = 0;
    for (auto it = tape_.rbegin(); it != tape_.rend(); ++it) {
        ++visits_;
        if (it->output.has_grad()) it->backward(it->output.grad());
    }
}

void Graph::reset() {
    tape_.clear();
    backward_done_ = false;
    visits_ = 0;
}

}  // namespace sscse
