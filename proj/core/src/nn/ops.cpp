#include "cevr/nn/ops.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <memory>

#include "cevr/error.hpp"

namespace cevr::nn {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

Var make_node(Tensor value, std::vector<Var> parents, std::function<void(Node&)> fn) {
    auto node = std::make_shared<Node>();
    node->value = std::move(value);
    bool grad = false;
    if (grad_enabled()) {
        for (const auto& p : parents) grad = grad || p->requires_grad;
    }
    if (grad) {
        node->requires_grad = true;
        node->parents = std::move(parents);
        node->backward = std::move(fn);
    }
    return node;
}

void check_same(const Var& a, const Var& b, const char* op) {
    require(a->shape() == b->shape(), ErrorKind::DimensionMismatch,
            std::string(op) + ": shape " + to_string(a->shape()) + " vs " + to_string(b->shape()));
}

// Rows are (in_channel, ky, kx); columns are output pixels.
void im2col(const Tensor& x, int k, Buffer& cols) {
    const int c = x.shape.c, h = x.shape.h, w = x.shape.w, pad = k / 2;
    const std::size_t plane = x.shape.plane();
    cols.assign(static_cast<std::size_t>(c) * k * k * plane, 0.0);
    std::size_t row = 0;
    for (int ci = 0; ci < c; ++ci) {
        const double* src = x.data.data() + ci * plane;
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx, ++row) {
                double* dst = cols.data() + row * plane;
                const int dy = ky - pad, dx = kx - pad;
                const int x0 = std::max(0, -dx), x1 = std::min(w, w - dx);
                for (int y = std::max(0, -dy); y < std::min(h, h - dy); ++y) {
                    std::copy(src + (y + dy) * w + x0 + dx, src + (y + dy) * w + x1 + dx,
                              dst + y * w + x0);
                }
            }
        }
    }
}

void col2im_add(const Buffer& cols, int k, const Shape& shape, Buffer& out) {
    const int c = shape.c, h = shape.h, w = shape.w, pad = k / 2;
    const std::size_t plane = shape.plane();
    std::size_t row = 0;
    for (int ci = 0; ci < c; ++ci) {
        double* dst = out.data() + ci * plane;
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx, ++row) {
                const double* src = cols.data() + row * plane;
                const int dy = ky - pad, dx = kx - pad;
                const int x0 = std::max(0, -dx), x1 = std::min(w, w - dx);
                for (int y = std::max(0, -dy); y < std::min(h, h - dy); ++y) {
                    double* d = dst + (y + dy) * w + dx;
                    const double* s = src + y * w;
                    for (int xx = x0; xx < x1; ++xx) d[xx] += s[xx];
                }
            }
        }
    }
}

template <typename F, typename G>
Var unary(const Var& x, F forward, G derivative) {
    Tensor out(x->shape());
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = forward(x->value.data[i]);
    return make_node(std::move(out), {x}, [derivative](Node& self) {
        Node& in = *self.parents[0];
        auto& g = in.ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i) {
            g[i] += self.grad[i] * derivative(in.value.data[i], self.value.data[i]);
        }
    });
}

}  // namespace

Var conv2d(const Var& x, const Var& weight, const Var& bias, int kernel) {
    require(kernel % 2 == 1, ErrorKind::InvalidArgument, "conv2d kernel must be odd");
    const Shape& xs = x->shape();
    const Shape& ws = weight->shape();
    require(ws.h == xs.c && ws.w == kernel * kernel, ErrorKind::DimensionMismatch,
            "conv2d weight " + to_string(ws) + " does not fit input " + to_string(xs));
    require(bias->shape() == Shape{ws.c, 1, 1}, ErrorKind::DimensionMismatch, "conv2d bias shape");

    const int cout = ws.c;
    const auto rows = static_cast<Eigen::Index>(xs.c) * kernel * kernel;
    const auto plane = static_cast<Eigen::Index>(xs.plane());

    auto cols = std::make_shared<Buffer>();
    const double* col_data = x->value.data.data();
    if (kernel > 1) {
        im2col(x->value, kernel, *cols);
        col_data = cols->data();
    }

    Tensor out(Shape{cout, xs.h, xs.w});
    MapMat y(out.data.data(), cout, plane);
    ConstMapMat w(weight->value.data.data(), cout, rows);
    y.noalias() = w * ConstMapMat(col_data, rows, plane);
    for (int o = 0; o < cout; ++o) y.row(o).array() += bias->value.data[o];

    return make_node(std::move(out), {x, weight, bias}, [cols, kernel, rows, plane, cout](Node& self) {
        Node& in = *self.parents[0];
        Node& wn = *self.parents[1];
        Node& bn = *self.parents[2];
        ConstMapMat dy(self.grad.data(), cout, plane);
        const double* col_data = kernel > 1 ? cols->data() : in.value.data.data();
        ConstMapMat col(col_data, rows, plane);
        if (wn.requires_grad) {
            MapMat dw(wn.ensure_grad().data(), cout, rows);
            dw.noalias() += dy * col.transpose();
        }
        if (bn.requires_grad) {
            auto& db = bn.ensure_grad();
            for (int o = 0; o < cout; ++o) db[o] += dy.row(o).sum();
        }
        if (in.requires_grad) {
            ConstMapMat w(wn.value.data.data(), cout, rows);
            if (kernel == 1) {
                MapMat dx(in.ensure_grad().data(), rows, plane);
                dx.noalias() += w.transpose() * dy;
            } else {
                Buffer dcol(static_cast<std::size_t>(rows * plane));
                MapMat dc(dcol.data(), rows, plane);
                dc.noalias() = w.transpose() * dy;
                col2im_add(dcol, kernel, in.shape(), in.ensure_grad());
            }
        }
    });
}

Var linear_with_scalar(const Var& x, const Var& s, const Var& weight, const Var& bias) {
    const Shape& xs = x->shape();
    const Shape& ws = weight->shape();
    require(ws.h == xs.c + 1 && ws.w == 1, ErrorKind::DimensionMismatch,
            "implicit layer weight " + to_string(ws) + " does not fit input " + to_string(xs));
    require(bias->shape() == Shape{ws.c, 1, 1}, ErrorKind::DimensionMismatch, "implicit bias shape");
    require(s->value.data.size() == 1, ErrorKind::InvalidArgument, "EV input must be scalar");

    const int cout = ws.c;
    const int cin = xs.c;
    const auto plane = static_cast<Eigen::Index>(xs.plane());
    const double sv = s->value.data[0];

    Tensor out(Shape{cout, xs.h, xs.w});
    MapMat y(out.data.data(), cout, plane);
    ConstMapMat w(weight->value.data.data(), cout, cin + 1);
    y.noalias() = w.leftCols(cin) * ConstMapMat(x->value.data.data(), cin, plane);
    for (int o = 0; o < cout; ++o) y.row(o).array() += w(o, cin) * sv + bias->value.data[o];

    return make_node(std::move(out), {x, s, weight, bias}, [cout, cin, plane](Node& self) {
        Node& in = *self.parents[0];
        Node& sn = *self.parents[1];
        Node& wn = *self.parents[2];
        Node& bn = *self.parents[3];
        ConstMapMat dy(self.grad.data(), cout, plane);
        const Eigen::VectorXd row_sum = dy.rowwise().sum();
        ConstMapMat w(wn.value.data.data(), cout, cin + 1);
        if (wn.requires_grad) {
            MapMat dw(wn.ensure_grad().data(), cout, cin + 1);
            dw.leftCols(cin).noalias() += dy * ConstMapMat(in.value.data.data(), cin, plane).transpose();
            dw.col(cin) += row_sum * sn.value.data[0];
        }
        if (bn.requires_grad) {
            auto& db = bn.ensure_grad();
            for (int o = 0; o < cout; ++o) db[o] += row_sum[o];
        }
        if (sn.requires_grad) sn.ensure_grad()[0] += w.col(cin).dot(row_sum);
        if (in.requires_grad) {
            MapMat dx(in.ensure_grad().data(), cin, plane);
            dx.noalias() += w.leftCols(cin).transpose() * dy;
        }
    });
}

Var silu(const Var& x) {
    return unary(
        x, [](double v) { return v / (1.0 + std::exp(-v)); },
        [](double v, double) {
            const double s = 1.0 / (1.0 + std::exp(-v));
            return s * (1.0 + v * (1.0 - s));
        });
}

Var sigmoid(const Var& x) {
    return unary(
        x, [](double v) { return 1.0 / (1.0 + std::exp(-v)); },
        [](double, double y) { return y * (1.0 - y); });
}

Var exp(const Var& x) {
    return unary(
        x, [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

Var clamp01(const Var& x) {
    return unary(
        x, [](double v) { return std::clamp(v, 0.0, 1.0); },
        [](double v, double) { return (v > 0.0 && v < 1.0) ? 1.0 : 0.0; });
}

Var add(const Var& a, const Var& b) {
    check_same(a, b, "add");
    Tensor out(a->shape());
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = a->value.data[i] + b->value.data[i];
    return make_node(std::move(out), {a, b}, [](Node& self) {
        for (int k = 0; k < 2; ++k) {
            Node& p = *self.parents[k];
            if (!p.requires_grad) continue;
            auto& g = p.ensure_grad();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
        }
    });
}

Var sub(const Var& a, const Var& b) {
    check_same(a, b, "sub");
    Tensor out(a->shape());
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = a->value.data[i] - b->value.data[i];
    return make_node(std::move(out), {a, b}, [](Node& self) {
        for (int k = 0; k < 2; ++k) {
            Node& p = *self.parents[k];
            if (!p.requires_grad) continue;
            const double sign = k == 0 ? 1.0 : -1.0;
            auto& g = p.ensure_grad();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += sign * self.grad[i];
        }
    });
}

Var mul(const Var& a, const Var& b) {
    check_same(a, b, "mul");
    Tensor out(a->shape());
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = a->value.data[i] * b->value.data[i];
    return make_node(std::move(out), {a, b}, [](Node& self) {
        Node& pa = *self.parents[0];
        Node& pb = *self.parents[1];
        if (pa.requires_grad) {
            auto& g = pa.ensure_grad();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pb.value.data[i];
        }
        if (pb.requires_grad) {
            auto& g = pb.ensure_grad();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pa.value.data[i];
        }
    });
}

Var scale(const Var& x, double factor) {
    return unary(
        x, [factor](double v) { return v * factor; }, [factor](double, double) { return factor; });
}

Var max_pool2(const Var& x) {
    const Shape& s = x->shape();
    require(s.h % 2 == 0 && s.w % 2 == 0, ErrorKind::PaddingRequired,
            "max_pool2 needs even dimensions, got " + to_string(s));
    Tensor out(Shape{s.c, s.h / 2, s.w / 2});
    auto argmax = std::make_shared<std::vector<std::size_t>>(out.data.size());
    std::size_t o = 0;
    for (int c = 0; c < s.c; ++c) {
        for (int y = 0; y < s.h / 2; ++y) {
            for (int xx = 0; xx < s.w / 2; ++xx, ++o) {
                std::size_t best = (static_cast<std::size_t>(c) * s.h + 2 * y) * s.w + 2 * xx;
                for (int dy = 0; dy < 2; ++dy) {
                    for (int dx = 0; dx < 2; ++dx) {
                        const std::size_t i = (static_cast<std::size_t>(c) * s.h + 2 * y + dy) * s.w + 2 * xx + dx;
                        if (x->value.data[i] > x->value.data[best]) best = i;
                    }
                }
                (*argmax)[o] = best;
                out.data[o] = x->value.data[best];
            }
        }
    }
    return make_node(std::move(out), {x}, [argmax](Node& self) {
        auto& g = self.parents[0]->ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) g[(*argmax)[i]] += self.grad[i];
    });
}

Var avg_pool2(const Var& x) {
    const Shape& s = x->shape();
    require(s.h % 2 == 0 && s.w % 2 == 0, ErrorKind::PaddingRequired,
            "avg_pool2 needs even dimensions, got " + to_string(s));
    Tensor out(Shape{s.c, s.h / 2, s.w / 2});
    for (int c = 0; c < s.c; ++c) {
        for (int y = 0; y < s.h / 2; ++y) {
            for (int xx = 0; xx < s.w / 2; ++xx) {
                out.at(c, y, xx) = 0.25 * (x->value.at(c, 2 * y, 2 * xx) + x->value.at(c, 2 * y, 2 * xx + 1) +
                                           x->value.at(c, 2 * y + 1, 2 * xx) +
                                           x->value.at(c, 2 * y + 1, 2 * xx + 1));
            }
        }
    }
    return make_node(std::move(out), {x}, [](Node& self) {
        Node& in = *self.parents[0];
        const Shape& s = in.shape();
        auto& g = in.ensure_grad();
        const Shape& os = self.shape();
        for (int c = 0; c < os.c; ++c) {
            for (int y = 0; y < os.h; ++y) {
                for (int xx = 0; xx < os.w; ++xx) {
                    const double v = 0.25 * self.grad[(static_cast<std::size_t>(c) * os.h + y) * os.w + xx];
                    for (int dy = 0; dy < 2; ++dy) {
                        for (int dx = 0; dx < 2; ++dx) {
                            g[(static_cast<std::size_t>(c) * s.h + 2 * y + dy) * s.w + 2 * xx + dx] += v;
                        }
                    }
                }
            }
        }
    });
}

Var resample(const Var& x, int h, int w, ResizeMethod method) {
    const Shape& s = x->shape();
    if (s.h == h && s.w == w) return x;
    auto rx = std::make_shared<AxisResampler>(AxisResampler::make(s.w, w, method));
    auto ry = std::make_shared<AxisResampler>(AxisResampler::make(s.h, h, method));

    Tensor tmp(Shape{s.c, s.h, w});
    for (int c = 0; c < s.c; ++c) {
        for (int y = 0; y < s.h; ++y) {
            for (int xx = 0; xx < w; ++xx) {
                double acc = 0.0;
                for (const auto& t : rx->taps[xx]) acc += t.weight * x->value.at(c, y, t.index);
                tmp.at(c, y, xx) = acc;
            }
        }
    }
    Tensor out(Shape{s.c, h, w});
    for (int c = 0; c < s.c; ++c) {
        for (int y = 0; y < h; ++y) {
            for (const auto& t : ry->taps[y]) {
                for (int xx = 0; xx < w; ++xx) out.at(c, y, xx) += t.weight * tmp.at(c, t.index, xx);
            }
        }
    }
    return make_node(std::move(out), {x}, [rx, ry](Node& self) {
        Node& in = *self.parents[0];
        const Shape& is = in.shape();
        const Shape& os = self.shape();
        Tensor gtmp(Shape{is.c, is.h, os.w});
        for (int c = 0; c < os.c; ++c) {
            for (int y = 0; y < os.h; ++y) {
                for (const auto& t : ry->taps[y]) {
                    for (int xx = 0; xx < os.w; ++xx) {
                        gtmp.at(c, t.index, xx) +=
                            t.weight * self.grad[(static_cast<std::size_t>(c) * os.h + y) * os.w + xx];
                    }
                }
            }
        }
        auto& g = in.ensure_grad();
        for (int c = 0; c < is.c; ++c) {
            for (int y = 0; y < is.h; ++y) {
                for (int xx = 0; xx < os.w; ++xx) {
                    const double v = gtmp.at(c, y, xx);
                    for (const auto& t : rx->taps[xx]) {
                        g[(static_cast<std::size_t>(c) * is.h + y) * is.w + t.index] += t.weight * v;
                    }
                }
            }
        }
    });
}

Var concat_channels(const Var& a, const Var& b) {
    const Shape& sa = a->shape();
    const Shape& sb = b->shape();
    require(sa.h == sb.h && sa.w == sb.w, ErrorKind::DimensionMismatch,
            "concat: spatial " + to_string(sa) + " vs " + to_string(sb));
    Tensor out(Shape{sa.c + sb.c, sa.h, sa.w});
    std::copy(a->value.data.begin(), a->value.data.end(), out.data.begin());
    std::copy(b->value.data.begin(), b->value.data.end(),
              out.data.begin() + static_cast<std::ptrdiff_t>(a->value.data.size()));
    return make_node(std::move(out), {a, b}, [](Node& self) {
        std::size_t offset = 0;
        for (int k = 0; k < 2; ++k) {
            Node& p = *self.parents[k];
            const std::size_t n = p.value.data.size();
            if (p.requires_grad) {
                auto& g = p.ensure_grad();
                for (std::size_t i = 0; i < n; ++i) g[i] += self.grad[offset + i];
            }
            offset += n;
        }
    });
}

Var slice_channels(const Var& x, int begin, int count) {
    const Shape& s = x->shape();
    require(begin >= 0 && count > 0 && begin + count <= s.c, ErrorKind::DimensionMismatch,
            "slice_channels out of range");
    const std::size_t plane = s.plane();
    Tensor out(Shape{count, s.h, s.w});
    std::copy(x->value.data.begin() + static_cast<std::ptrdiff_t>(begin * plane),
              x->value.data.begin() + static_cast<std::ptrdiff_t>((begin + count) * plane),
              out.data.begin());
    return make_node(std::move(out), {x}, [begin, plane](Node& self) {
        auto& g = self.parents[0]->ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) g[begin * plane + i] += self.grad[i];
    });
}

Var mean_abs_diff(const Var& a, const Var& b) {
    check_same(a, b, "mean_abs_diff");
    const std::size_t n = a->value.data.size();
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += std::abs(a->value.data[i] - b->value.data[i]);
    Tensor out(Shape{1, 1, 1}, acc / static_cast<double>(n));
    return make_node(std::move(out), {a, b}, [n](Node& self) {
        Node& pa = *self.parents[0];
        Node& pb = *self.parents[1];
        const double g = self.grad[0] / static_cast<double>(n);
        double* ga = pa.requires_grad ? pa.ensure_grad().data() : nullptr;
        double* gb = pb.requires_grad ? pb.ensure_grad().data() : nullptr;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = pa.value.data[i] - pb.value.data[i];
            const double step = d > 0.0 ? g : (d < 0.0 ? -g : 0.0);
            if (ga) ga[i] += step;
            if (gb) gb[i] -= step;
        }
    });
}

}  // namespace cevr::nn
