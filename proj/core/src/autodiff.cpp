#include "fqs/autodiff.hpp"

#include <cassert>
#include <cmath>

namespace fqs::ad {

namespace {
constexpr double kGeluK = 0.7978845608028654;  // sqrt(2 / pi)
constexpr double kGeluC = 0.044715;
}  // namespace

double gelu(double x) {
    const double u = kGeluK * (x + kGeluC * x * x * x);
    return 0.5 * x * (1.0 + std::tanh(u));
}

double gelu_derivative(double x) {
    const double u = kGeluK * (x + kGeluC * x * x * x);
    const double t = std::tanh(u);
    const double du = kGeluK * (1.0 + 3.0 * kGeluC * x * x);
    return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du;
}

Var Tape::push(Matrix value, std::function<void(Tape&, std::size_t)> back) {
    Node node;
    node.value = std::move(value);
    if (record_) {
        node.back = std::move(back);
    }
    nodes_.push_back(std::move(node));
    return Var{nodes_.size() - 1};
}

Var Tape::input(Matrix value) { return push(std::move(value), nullptr); }

Var Tape::matmul(Var a, Var b) {
    assert(value(a).cols() == value(b).rows());
    Matrix out = value(a) * value(b);
    return push(std::move(out), [a, b](Tape& t, std::size_t self) {
        const Matrix& g = t.adj_of(self);
        t.adj(a).noalias() += g * t.value(b).transpose();
        t.adj(b).noalias() += t.value(a).transpose() * g;
    });
}

Var Tape::matmul_transposed(Var a, Var b) {
    assert(value(a).cols() == value(b).cols());
    Matrix out = value(a) * value(b).transpose();
    return push(std::move(out), [a, b](Tape& t, std::size_t self) {
        const Matrix& g = t.adj_of(self);
        t.adj(a).noalias() += g * t.value(b);
        t.adj(b).noalias() += g.transpose() * t.value(a);
    });
}

Var Tape::add(Var a, Var b) {
    assert(value(a).rows() == value(b).rows() && value(a).cols() == value(b).cols());
    Matrix out = value(a) + value(b);
    return push(std::move(out), [a, b](Tape& t, std::size_t self) {
        t.adj(a) += t.adj_of(self);
        t.adj(b) += t.adj_of(self);
    });
}

Var Tape::add_row(Var a, Var row) {
    assert(value(row).rows() == 1 && value(row).cols() == value(a).cols());
    Matrix out = value(a).rowwise() + value(row).row(0);
    return push(std::move(out), [a, row](Tape& t, std::size_t self) {
        t.adj(a) += t.adj_of(self);
        t.adj(row) += t.adj_of(self).colwise().sum();
    });
}

Var Tape::scale(Var a, double s) {
    Matrix out = value(a) * s;
    return push(std::move(out), [a, s](Tape& t, std::size_t self) { t.adj(a) += t.adj_of(self) * s; });
}

Var Tape::mask(Var a, Matrix m) {
    assert(value(a).rows() == m.rows() && value(a).cols() == m.cols());
    Matrix out = value(a).cwiseProduct(m);
    return push(std::move(out), [a, m = std::move(m)](Tape& t, std::size_t self) {
        t.adj(a) += t.adj_of(self).cwiseProduct(m);
    });
}

Var Tape::gelu(Var a) {
    Matrix out = value(a).unaryExpr([](double x) { return ad::gelu(x); });
    return push(std::move(out), [a](Tape& t, std::size_t self) {
        t.adj(a) += t.adj_of(self).cwiseProduct(t.value(a).unaryExpr([](double x) { return gelu_derivative(x); }));
    });
}

Var Tape::softmax_rows(Var a) {
    const Matrix& x = value(a);
    Matrix out(x.rows(), x.cols());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        const double mx = x.row(r).maxCoeff();
        out.row(r) = (x.row(r).array() - mx).exp().matrix();
        out.row(r) /= out.row(r).sum();
    }
    return push(std::move(out), [a](Tape& t, std::size_t self) {
        const Matrix& y = t.nodes_[self].value;
        const Matrix& g = t.adj_of(self);
        for (Eigen::Index r = 0; r < y.rows(); ++r) {
            const double dot = g.row(r).dot(y.row(r));
            t.adj(a).row(r) += (y.row(r).array() * (g.row(r).array() - dot)).matrix();
        }
    });
}

Var Tape::cols(Var a, Eigen::Index start, Eigen::Index count) {
    Matrix out = value(a).middleCols(start, count);
    return push(std::move(out), [a, start, count](Tape& t, std::size_t self) {
        t.adj(a).middleCols(start, count) += t.adj_of(self);
    });
}

Var Tape::row(Var a, Eigen::Index r) {
    Matrix out = value(a).row(r);
    return push(std::move(out), [a, r](Tape& t, std::size_t self) { t.adj(a).row(r) += t.adj_of(self).row(0); });
}

Var Tape::concat_cols(std::span<const Var> parts) {
    assert(!parts.empty());
    const Eigen::Index rows = value(parts[0]).rows();
    Eigen::Index total = 0;
    for (const Var p : parts) {
        assert(value(p).rows() == rows);
        total += value(p).cols();
    }
    Matrix out(rows, total);
    Eigen::Index at = 0;
    for (const Var p : parts) {
        out.middleCols(at, value(p).cols()) = value(p);
        at += value(p).cols();
    }
    std::vector<Var> ids(parts.begin(), parts.end());
    return push(std::move(out), [ids = std::move(ids)](Tape& t, std::size_t self) {
        Eigen::Index at = 0;
        for (const Var p : ids) {
            const Eigen::Index w = t.value(p).cols();
            t.adj(p) += t.adj_of(self).middleCols(at, w);
            at += w;
        }
    });
}

Var Tape::gather_rows(Var table, std::vector<int> rows) {
    const Matrix& tab = value(table);
    Matrix out(static_cast<Eigen::Index>(rows.size()), tab.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        assert(rows[i] >= 0 && rows[i] < tab.rows());
        out.row(static_cast<Eigen::Index>(i)) = tab.row(rows[i]);
    }
    return push(std::move(out), [table, rows = std::move(rows)](Tape& t, std::size_t self) {
        const Matrix& g = t.adj_of(self);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            t.adj(table).row(rows[i]) += g.row(static_cast<Eigen::Index>(i));
        }
    });
}

void Tape::backward(Var out, const Matrix& seed) {
    assert(record_);
    assert(seed.rows() == value(out).rows() && seed.cols() == value(out).cols());
    for (std::size_t i = 0; i <= out.id; ++i) {
        nodes_[i].grad = Matrix::Zero(nodes_[i].value.rows(), nodes_[i].value.cols());
    }
    nodes_[out.id].grad = seed;
    for (std::size_t i = out.id + 1; i-- > 0;) {
        if (nodes_[i].back) {
            nodes_[i].back(*this, i);
        }
    }
}

}  // namespace fqs::ad
