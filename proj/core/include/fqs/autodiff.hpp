#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace fqs::ad {

using Matrix = Eigen::MatrixXd;

/// Handle to a node recorded on a Tape.
struct Var {
    std::size_t id = 0;
};

/// Reverse-mode tape over dense double matrices.
///
/// Every operation appends a node holding its value and, when recording, a
/// closure that propagates the node's adjoint to its inputs. backward() walks
/// the nodes in reverse creation order, so gradients are exact up to floating
/// point rounding and the accumulation order is fixed.
class Tape {
public:
    explicit Tape(bool record = true) : record_(record) {}

    Var input(Matrix value);

    const Matrix& value(Var v) const { return nodes_[v.id].value; }
    const Matrix& grad(Var v) const { return nodes_[v.id].grad; }

    Var matmul(Var a, Var b);
    /// a * b^T
    Var matmul_transposed(Var a, Var b);
    Var add(Var a, Var b);
    /// Adds a 1xN row to every row of a.
    Var add_row(Var a, Var row);
    Var scale(Var a, double s);
    /// Elementwise product with a constant mask (dropout).
    Var mask(Var a, Matrix mask);
    /// tanh-approximated GELU.
    Var gelu(Var a);
    Var softmax_rows(Var a);
    Var cols(Var a, Eigen::Index start, Eigen::Index count);
    Var row(Var a, Eigen::Index r);
    Var concat_cols(std::span<const Var> parts);
    Var gather_rows(Var table, std::vector<int> rows);

    /// Seeds the adjoint of `out` and propagates to every node created before it.
    void backward(Var out, const Matrix& seed);

    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Matrix value;
        Matrix grad;
        std::function<void(Tape&, std::size_t)> back;
    };

    Var push(Matrix value, std::function<void(Tape&, std::size_t)> back);
    Matrix& adj(Var v) { return nodes_[v.id].grad; }
    const Matrix& adj_of(std::size_t id) const { return nodes_[id].grad; }

    bool record_;
    std::vector<Node> nodes_;
};

double gelu(double x);
double gelu_derivative(double x);

}  // namespace fqs::ad
