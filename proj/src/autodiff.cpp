#include "faithlog/autodiff.hpp"

#include <cmath>

namespace faithlog::ad {

namespace {
void check_same_shape(const Matrix& a, const Matrix& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw ShapeError(std::string(op) + ": shape mismatch");
}
}  // namespace

Var Tape::matmul(Var a, Var b) {
    const Matrix& A = value(a);
    const Matrix& B = value(b);
    if (A.cols() != B.rows()) throw ShapeError("matmul: inner dimension mismatch");
    Matrix out = A * B;
    return push(std::move(out), [a, b](Tape& t, const Node& n) {
        t.g(a.id).noalias() += n.grad * t.value(b).transpose();
        t.g(b.id).noalias() += t.value(a).transpose() * n.grad;
    });
}

Var Tape::matmul_nt(Var a, Var b) {
    const Matrix& A = value(a);
    const Matrix& B = value(b);
    if (A.cols() != B.cols()) throw ShapeError("matmul_nt: inner dimension mismatch");
    Matrix out = A * B.transpose();
    return push(std::move(out), [a, b](Tape& t, const Node& n) {
        t.g(a.id).noalias() += n.grad * t.value(b);
        t.g(b.id).noalias() += n.grad.transpose() * t.value(a);
    });
}

Var Tape::add(Var a, Var b) {
    check_same_shape(value(a), value(b), "add");
    return push(value(a) + value(b), [a, b](Tape& t, const Node& n) {
        t.g(a.id) += n.grad;
        t.g(b.id) += n.grad;
    });
}

Var Tape::sub(Var a, Var b) {
    check_same_shape(value(a), value(b), "sub");
    return push(value(a) - value(b), [a, b](Tape& t, const Node& n) {
        t.g(a.id) += n.grad;
        t.g(b.id) -= n.grad;
    });
}

Var Tape::add_rowvec(Var m, Var row) {
    const Matrix& M = value(m);
    const Matrix& R = value(row);
    if (R.rows() != 1 || R.cols() != M.cols()) throw ShapeError("add_rowvec: bad row shape");
    Matrix out = M.rowwise() + R.row(0);
    return push(std::move(out), [m, row](Tape& t, const Node& n) {
        t.g(m.id) += n.grad;
        t.g(row.id).row(0) += n.grad.colwise().sum();
    });
}

Var Tape::cwise_mul(Var a, Var b) {
    check_same_shape(value(a), value(b), "cwise_mul");
    return push(value(a).cwiseProduct(value(b)), [a, b](Tape& t, const Node& n) {
        t.g(a.id) += n.grad.cwiseProduct(t.value(b));
        t.g(b.id) += n.grad.cwiseProduct(t.value(a));
    });
}

Var Tape::cwise_mul_rowvec(Var m, Var row) {
    const Matrix& M = value(m);
    const Matrix& R = value(row);
    if (R.rows() != 1 || R.cols() != M.cols()) throw ShapeError("cwise_mul_rowvec: bad row shape");
    Matrix out = (M.array().rowwise() * R.row(0).array()).matrix();
    return push(std::move(out), [m, row](Tape& t, const Node& n) {
        t.g(m.id) += (n.grad.array().rowwise() * t.value(row).row(0).array()).matrix();
        t.g(row.id).row(0) += n.grad.cwiseProduct(t.value(m)).colwise().sum();
    });
}

Var Tape::scale(Var a, double s) {
    return push(value(a) * s, [a, s](Tape& t, const Node& n) { t.g(a.id) += n.grad * s; });
}

Var Tape::add_scalar(Var a, double s) {
    return push(value(a).array() + s, [a](Tape& t, const Node& n) { t.g(a.id) += n.grad; });
}

Var Tape::relu(Var a) {
    Matrix out = value(a).cwiseMax(0.0);
    return push(std::move(out), [a](Tape& t, const Node& n) {
        t.g(a.id) += n.grad.cwiseProduct(
            (t.value(a).array() > 0.0).cast<double>().matrix());
    });
}

Var Tape::sigmoid(Var a) {
    Matrix out = (1.0 / (1.0 + (-value(a).array()).exp())).matrix();
    Var v = push(std::move(out), nullptr);
    nodes_[v.id].back = [a, v](Tape& t, const Node& n) {
        const Matrix& y = t.value(v);
        t.g(a.id) += n.grad.cwiseProduct(y.cwiseProduct(Matrix::Ones(y.rows(), y.cols()) - y));
    };
    return v;
}

Var Tape::log(Var a) {
    return push(value(a).array().log().matrix(), [a](Tape& t, const Node& n) {
        t.g(a.id) += n.grad.cwiseQuotient(t.value(a));
    });
}

Var Tape::clamp(Var a, double lo, double hi) {
    Matrix out = value(a).cwiseMax(lo).cwiseMin(hi);
    return push(std::move(out), [a, lo, hi](Tape& t, const Node& n) {
        const Matrix& x = t.value(a);
        Matrix pass = ((x.array() > lo) && (x.array() < hi)).cast<double>().matrix();
        t.g(a.id) += n.grad.cwiseProduct(pass);
    });
}

Var Tape::cwise_inv(Var a) {
    Matrix out = value(a).cwiseInverse();
    Var v = push(std::move(out), nullptr);
    nodes_[v.id].back = [a, v](Tape& t, const Node& n) {
        const Matrix& y = t.value(v);
        t.g(a.id) -= n.grad.cwiseProduct(y.cwiseProduct(y));
    };
    return v;
}

Var Tape::mul_scalarvar(Var a, Var s) {
    const Matrix& S = value(s);
    if (S.rows() != 1 || S.cols() != 1) throw ShapeError("mul_scalarvar: s must be 1x1");
    return push(value(a) * S(0, 0), [a, s](Tape& t, const Node& n) {
        t.g(a.id) += n.grad * t.value(s)(0, 0);
        t.g(s.id)(0, 0) += n.grad.cwiseProduct(t.value(a)).sum();
    });
}

Var Tape::transpose(Var a) {
    return push(value(a).transpose(), [a](Tape& t, const Node& n) {
        t.g(a.id) += n.grad.transpose();
    });
}

Var Tape::sum(Var a) {
    Matrix out(1, 1);
    out(0, 0) = value(a).sum();
    return push(std::move(out), [a](Tape& t, const Node& n) {
        t.g(a.id).array() += n.grad(0, 0);
    });
}

Var Tape::max_elem(Var a) {
    Eigen::Index r = 0, c = 0;
    const Matrix& A = value(a);
    A.maxCoeff(&r, &c);
    Matrix out(1, 1);
    out(0, 0) = A(r, c);
    return push(std::move(out), [a, r, c](Tape& t, const Node& n) {
        t.g(a.id)(r, c) += n.grad(0, 0);
    });
}

Var Tape::dot_const(Var a, const Matrix& c) {
    check_same_shape(value(a), c, "dot_const");
    Matrix out(1, 1);
    out(0, 0) = value(a).cwiseProduct(c).sum();
    Matrix cc = c;
    return push(std::move(out), [a, cc](Tape& t, const Node& n) {
        t.g(a.id) += n.grad(0, 0) * cc;
    });
}

Var Tape::hcat(const std::vector<Var>& parts) {
    if (parts.empty()) throw ShapeError("hcat: empty");
    Eigen::Index rows = value(parts[0]).rows();
    Eigen::Index cols = 0;
    for (Var p : parts) {
        if (value(p).rows() != rows) throw ShapeError("hcat: row mismatch");
        cols += value(p).cols();
    }
    Matrix out(rows, cols);
    Eigen::Index off = 0;
    for (Var p : parts) {
        out.middleCols(off, value(p).cols()) = value(p);
        off += value(p).cols();
    }
    return push(std::move(out), [parts](Tape& t, const Node& n) {
        Eigen::Index off = 0;
        for (Var p : parts) {
            Eigen::Index w = t.value(p).cols();
            t.g(p.id) += n.grad.middleCols(off, w);
            off += w;
        }
    });
}

Var Tape::select_rows(Var m, const std::vector<int>& idx) {
    const Matrix& M = value(m);
    Matrix out(static_cast<Eigen::Index>(idx.size()), M.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] < 0 || idx[i] >= M.rows()) throw ShapeError("select_rows: index out of range");
        out.row(static_cast<Eigen::Index>(i)) = M.row(idx[i]);
    }
    return push(std::move(out), [m, idx](Tape& t, const Node& n) {
        for (std::size_t i = 0; i < idx.size(); ++i)
            t.g(m.id).row(idx[i]) += n.grad.row(static_cast<Eigen::Index>(i));
    });
}

Var Tape::softmax_rows_masked(Var logits, const std::vector<char>& col_active) {
    const Matrix& L = value(logits);
    if (static_cast<Eigen::Index>(col_active.size()) != L.cols())
        throw ShapeError("softmax_rows_masked: mask size mismatch");
    Matrix out = Matrix::Zero(L.rows(), L.cols());
    for (Eigen::Index i = 0; i < L.rows(); ++i) {
        double mx = -std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < L.cols(); ++j)
            if (col_active[j]) mx = std::max(mx, L(i, j));
        double denom = 0.0;
        for (Eigen::Index j = 0; j < L.cols(); ++j)
            if (col_active[j]) denom += std::exp(L(i, j) - mx);
        for (Eigen::Index j = 0; j < L.cols(); ++j)
            if (col_active[j]) out(i, j) = std::exp(L(i, j) - mx) / denom;
    }
    Var v = push(std::move(out), nullptr);
    // dx_ij = y_ij * (g_ij - sum_k g_ik y_ik); masked columns have y = 0.
    nodes_[v.id].back = [logits, v](Tape& t, const Node& n) {
        const Matrix& y = t.value(v);
        Matrix dx(y.rows(), y.cols());
        for (Eigen::Index i = 0; i < y.rows(); ++i) {
            double dot = n.grad.row(i).cwiseProduct(y.row(i)).sum();
            dx.row(i) = y.row(i).cwiseProduct((n.grad.row(i).array() - dot).matrix());
        }
        t.g(logits.id) += dx;
    };
    return v;
}

Var Tape::layernorm_rows(Var a, double eps) {
    const Matrix& X = value(a);
    const double d = static_cast<double>(X.cols());
    Matrix out(X.rows(), X.cols());
    Vector inv_std(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        double mu = X.row(i).mean();
        double var = (X.row(i).array() - mu).square().sum() / d;
        double s = 1.0 / std::sqrt(var + eps);
        inv_std(i) = s;
        out.row(i) = (X.row(i).array() - mu) * s;
    }
    Var v = push(std::move(out), nullptr);
    nodes_[v.id].back = [a, v, inv_std, d](Tape& t, const Node& n) {
        const Matrix& y = t.value(v);
        Matrix dx(y.rows(), y.cols());
        for (Eigen::Index i = 0; i < y.rows(); ++i) {
            double mg = n.grad.row(i).mean();
            double mgy = n.grad.row(i).cwiseProduct(y.row(i)).mean();
            dx.row(i) =
                inv_std(i) * (n.grad.row(i).array() - mg - y.row(i).array() * mgy).matrix();
        }
        t.g(a.id) += dx;
    };
    return v;
}

Var Tape::mean_rows_masked(Var m, const std::vector<char>& row_active) {
    const Matrix& M = value(m);
    if (static_cast<Eigen::Index>(row_active.size()) != M.rows())
        throw ShapeError("mean_rows_masked: mask size mismatch");
    int count = 0;
    Matrix out = Matrix::Zero(1, M.cols());
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        if (!row_active[i]) continue;
        out.row(0) += M.row(i);
        ++count;
    }
    if (count == 0) throw ShapeError("mean_rows_masked: no active rows");
    out /= static_cast<double>(count);
    return push(std::move(out), [m, row_active, count](Tape& t, const Node& n) {
        for (Eigen::Index i = 0; i < t.value(m).rows(); ++i)
            if (row_active[i]) t.g(m.id).row(i) += n.grad.row(0) / static_cast<double>(count);
    });
}

void Tape::backward(Var root) {
    const Matrix& rv = value(root);
    if (rv.rows() != 1 || rv.cols() != 1) throw ShapeError("backward: root must be scalar");
    nodes_[root.id].grad(0, 0) = 1.0;
    for (int i = root.id; i >= 0; --i) {
        const Node& n = nodes_[i];
        if (n.back) n.back(*this, n);
        if (n.bound_grad) *n.bound_grad += n.grad;
    }
}

}  // namespace faithlog::ad
