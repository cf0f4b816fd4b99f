#include "ftc/state_space.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

namespace ftc::ss {

namespace {

int label_total(const std::vector<ChannelGroup>& groups) {
    return std::accumulate(groups.begin(), groups.end(), 0,
                           [](int acc, const ChannelGroup& g) { return acc + g.size; });
}

void require(bool ok, const std::string& what) {
    if (!ok) throw ChannelMismatch(what);
}

}  // namespace

StateSpace::StateSpace(Matrix a, Matrix b, Matrix c, Matrix d)
    : A(std::move(a)), B(std::move(b)), C(std::move(c)), D(std::move(d)) {
    validate();
}

void StateSpace::validate() const {
    require(A.rows() == A.cols(), "A must be square");
    require(B.rows() == A.rows(), "B row count must match state dimension");
    require(C.cols() == A.cols(), "C column count must match state dimension");
    require(D.rows() == C.rows() && D.cols() == B.cols(), "D must be p x m");
    if (!inputs.empty()) require(label_total(inputs) == m(), "input labels must sum to m");
    if (!outputs.empty()) require(label_total(outputs) == p(), "output labels must sum to p");
}

static std::pair<int, int> find_span(const std::vector<ChannelGroup>& groups,
                                     const std::string& name, const char* kind) {
    int offset = 0;
    for (const auto& g : groups) {
        if (g.name == name) return {offset, g.size};
        offset += g.size;
    }
    throw ChannelMismatch(std::string("no ") + kind + " channel named '" + name + "'");
}

std::pair<int, int> StateSpace::input_span(const std::string& name) const {
    return find_span(inputs, name, "input");
}

std::pair<int, int> StateSpace::output_span(const std::string& name) const {
    return find_span(outputs, name, "output");
}

StateSpace StateSpace::input_slice(int offset, int count) const {
    StateSpace r;
    r.A = A;
    r.B = B.middleCols(offset, count);
    r.C = C;
    r.D = D.middleCols(offset, count);
    r.outputs = outputs;
    return r;
}

StateSpace StateSpace::output_slice(int offset, int count) const {
    StateSpace r;
    r.A = A;
    r.B = B;
    r.C = C.middleRows(offset, count);
    r.D = D.middleRows(offset, count);
    r.inputs = inputs;
    return r;
}

StateSpace StateSpace::input_channels(const std::vector<std::string>& names) const {
    StateSpace r;
    r.A = A;
    r.C = C;
    r.outputs = outputs;
    int total = 0;
    for (const auto& name : names) total += input_span(name).second;
    r.B.resize(n(), total);
    r.D.resize(p(), total);
    int at = 0;
    for (const auto& name : names) {
        auto [off, sz] = input_span(name);
        r.B.middleCols(at, sz) = B.middleCols(off, sz);
        r.D.middleCols(at, sz) = D.middleCols(off, sz);
        r.inputs.push_back({name, sz});
        at += sz;
    }
    return r;
}

StateSpace StateSpace::output_channels(const std::vector<std::string>& names) const {
    StateSpace r;
    r.A = A;
    r.B = B;
    r.inputs = inputs;
    int total = 0;
    for (const auto& name : names) total += output_span(name).second;
    r.C.resize(total, n());
    r.D.resize(total, m());
    int at = 0;
    for (const auto& name : names) {
        auto [off, sz] = output_span(name);
        r.C.middleRows(at, sz) = C.middleRows(off, sz);
        r.D.middleRows(at, sz) = D.middleRows(off, sz);
        r.outputs.push_back({name, sz});
        at += sz;
    }
    return r;
}

// --- constructors --------------------------------------------------------

StateSpace ss_static(const Matrix& D) {
    StateSpace g;
    g.A.resize(0, 0);
    g.B.resize(0, D.cols());
    g.C.resize(D.rows(), 0);
    g.D = D;
    return g;
}

StateSpace ss_eye(int k) { return ss_static(Matrix::Identity(k, k)); }

StateSpace ss_zero(int p, int m) { return ss_static(Matrix::Zero(p, m)); }

StateSpace ss_first_order(double dc, double tau, int k) {
    if (tau <= 0.0) throw IllPosed("first-order lag needs tau > 0");
    StateSpace g;
    g.A = Matrix::Identity(k, k) * (-1.0 / tau);
    g.B = Matrix::Identity(k, k) * (1.0 / tau);
    g.C = Matrix::Identity(k, k) * dc;
    g.D = Matrix::Zero(k, k);
    return g;
}

// --- block algebra -------------------------------------------------------

StateSpace cascade(const StateSpace& first, const StateSpace& second) {
    require(second.m() == first.p(), "cascade: inner dimensions disagree");
    const int n1 = first.n(), n2 = second.n();
    StateSpace r;
    // x = [x1; x2]:  A = [A1 0; B2 C1 A2], B = [B1; B2 D1],
    //                C = [D2 C1, C2],      D = D2 D1.
    r.A.setZero(n1 + n2, n1 + n2);
    r.A.topLeftCorner(n1, n1) = first.A;
    r.A.bottomLeftCorner(n2, n1) = second.B * first.C;
    r.A.bottomRightCorner(n2, n2) = second.A;
    r.B.resize(n1 + n2, first.m());
    r.B.topRows(n1) = first.B;
    r.B.bottomRows(n2) = second.B * first.D;
    r.C.resize(second.p(), n1 + n2);
    r.C.leftCols(n1) = second.D * first.C;
    r.C.rightCols(n2) = second.C;
    r.D = second.D * first.D;
    return r;
}

StateSpace add(const StateSpace& a, const StateSpace& b) {
    require(a.m() == b.m() && a.p() == b.p(), "add: dimensions disagree");
    const int n1 = a.n(), n2 = b.n();
    StateSpace r;
    r.A.setZero(n1 + n2, n1 + n2);
    r.A.topLeftCorner(n1, n1) = a.A;
    r.A.bottomRightCorner(n2, n2) = b.A;
    r.B.resize(n1 + n2, a.m());
    r.B.topRows(n1) = a.B;
    r.B.bottomRows(n2) = b.B;
    r.C.resize(a.p(), n1 + n2);
    r.C.leftCols(n1) = a.C;
    r.C.rightCols(n2) = b.C;
    r.D = a.D + b.D;
    return r;
}

StateSpace sub(const StateSpace& a, const StateSpace& b) { return add(a, negate(b)); }

StateSpace hcat(const StateSpace& a, const StateSpace& b) {
    require(a.p() == b.p(), "hcat: output dimensions disagree");
    const int n1 = a.n(), n2 = b.n();
    StateSpace r;
    r.A.setZero(n1 + n2, n1 + n2);
    r.A.topLeftCorner(n1, n1) = a.A;
    r.A.bottomRightCorner(n2, n2) = b.A;
    r.B.setZero(n1 + n2, a.m() + b.m());
    r.B.topLeftCorner(n1, a.m()) = a.B;
    r.B.bottomRightCorner(n2, b.m()) = b.B;
    r.C.resize(a.p(), n1 + n2);
    r.C.leftCols(n1) = a.C;
    r.C.rightCols(n2) = b.C;
    r.D.resize(a.p(), a.m() + b.m());
    r.D.leftCols(a.m()) = a.D;
    r.D.rightCols(b.m()) = b.D;
    return r;
}

StateSpace vcat(const StateSpace& a, const StateSpace& b) {
    require(a.m() == b.m(), "vcat: input dimensions disagree");
    const int n1 = a.n(), n2 = b.n();
    StateSpace r;
    r.A.setZero(n1 + n2, n1 + n2);
    r.A.topLeftCorner(n1, n1) = a.A;
    r.A.bottomRightCorner(n2, n2) = b.A;
    r.B.resize(n1 + n2, a.m());
    r.B.topRows(n1) = a.B;
    r.B.bottomRows(n2) = b.B;
    r.C.setZero(a.p() + b.p(), n1 + n2);
    r.C.topLeftCorner(a.p(), n1) = a.C;
    r.C.bottomRightCorner(b.p(), n2) = b.C;
    r.D.resize(a.p() + b.p(), a.m());
    r.D.topRows(a.p()) = a.D;
    r.D.bottomRows(b.p()) = b.D;
    return r;
}

StateSpace diagcat(const StateSpace& a, const StateSpace& b) {
    const int n1 = a.n(), n2 = b.n();
    StateSpace r;
    r.A.setZero(n1 + n2, n1 + n2);
    r.A.topLeftCorner(n1, n1) = a.A;
    r.A.bottomRightCorner(n2, n2) = b.A;
    r.B.setZero(n1 + n2, a.m() + b.m());
    r.B.topLeftCorner(n1, a.m()) = a.B;
    r.B.bottomRightCorner(n2, b.m()) = b.B;
    r.C.setZero(a.p() + b.p(), n1 + n2);
    r.C.topLeftCorner(a.p(), n1) = a.C;
    r.C.bottomRightCorner(b.p(), n2) = b.C;
    r.D.setZero(a.p() + b.p(), a.m() + b.m());
    r.D.topLeftCorner(a.p(), a.m()) = a.D;
    r.D.bottomRightCorner(b.p(), b.m()) = b.D;
    return r;
}

StateSpace premultiply(const Matrix& M, const StateSpace& g) {
    require(M.cols() == g.p(), "premultiply: dimensions disagree");
    StateSpace r;
    r.A = g.A;
    r.B = g.B;
    r.C = M * g.C;
    r.D = M * g.D;
    return r;
}

StateSpace postmultiply(const StateSpace& g, const Matrix& M) {
    require(g.m() == M.rows(), "postmultiply: dimensions disagree");
    StateSpace r;
    r.A = g.A;
    r.B = g.B * M;
    r.C = g.C;
    r.D = g.D * M;
    return r;
}

StateSpace negate(const StateSpace& g) { return premultiply(-Matrix::Identity(g.p(), g.p()), g); }

StateSpace inverse(const StateSpace& g) {
    require(g.m() == g.p(), "inverse: system must be square");
    Eigen::FullPivLU<Matrix> lu(g.D);
    if (!lu.isInvertible()) throw IllPosed("inverse: feedthrough D is singular");
    const Matrix Dinv = lu.inverse();
    StateSpace r;
    // (A - B D^-1 C, B D^-1, -D^-1 C, D^-1)
    r.A = g.A - g.B * Dinv * g.C;
    r.B = g.B * Dinv;
    r.C = -Dinv * g.C;
    r.D = Dinv;
    return r;
}

StateSpace feedback(const StateSpace& g, const StateSpace& h) {
    require(g.p() == h.m() && h.p() == g.m(), "feedback: loop dimensions disagree");
    const int n1 = g.n(), n2 = h.n();
    const Matrix R = Matrix::Identity(g.m(), g.m()) + h.D * g.D;
    Eigen::FullPivLU<Matrix> lu(R);
    if (!lu.isInvertible()) throw IllPosed("feedback: algebraic loop is singular");
    const Matrix Rinv = lu.inverse();
    // y = G(u - H y).  Eliminate the loop input e = u - H y:
    //   e = Rinv (u - h.D g.C x1 ... ) via standard block formulas.
    StateSpace r;
    const Matrix E = Rinv;  // (I + Dh Dg)^-1
    const Matrix Dg = g.D, Dh = h.D;
    r.A.setZero(n1 + n2, n1 + n2);
    r.A.topLeftCorner(n1, n1) = g.A - g.B * E * Dh * g.C;
    r.A.topRightCorner(n1, n2) = -g.B * E * h.C;
    r.A.bottomLeftCorner(n2, n1) = h.B * (g.C - Dg * E * Dh * g.C);
    r.A.bottomRightCorner(n2, n2) = h.A - h.B * Dg * E * h.C;
    r.B.resize(n1 + n2, g.m());
    r.B.topRows(n1) = g.B * E;
    r.B.bottomRows(n2) = h.B * Dg * E;
    r.C.resize(g.p(), n1 + n2);
    r.C.leftCols(n1) = g.C - Dg * E * Dh * g.C;
    r.C.rightCols(n2) = -Dg * E * h.C;
    r.D = Dg * E;
    return r;
}

// --- analysis ------------------------------------------------------------

Eigen::VectorXcd poles(const StateSpace& g) {
    if (g.n() == 0) return Eigen::VectorXcd();
    return g.A.eigenvalues();
}

double spectral_abscissa(const Matrix& A) {
    if (A.rows() == 0) return -std::numeric_limits<double>::infinity();
    return A.eigenvalues().real().maxCoeff();
}

bool is_stable(const StateSpace& g, double margin) {
    return spectral_abscissa(g.A) < -margin;
}

Matrix dcgain(const StateSpace& g) {
    if (g.n() == 0) return g.D;
    return g.D - g.C * g.A.partialPivLu().solve(g.B);
}

ComplexMatrix freq_response(const StateSpace& g, double w) {
    using namespace std::complex_literals;
    if (g.n() == 0) return g.D.cast<std::complex<double>>();
    ComplexMatrix M = (1i * w * ComplexMatrix::Identity(g.n(), g.n())) - g.A.cast<std::complex<double>>();
    ComplexMatrix X = M.partialPivLu().solve(g.B.cast<std::complex<double>>());
    return g.C.cast<std::complex<double>>() * X + g.D.cast<std::complex<double>>();
}

double sigma_max(const StateSpace& g, double w) {
    if (g.p() == 0 || g.m() == 0) return 0.0;
    Eigen::JacobiSVD<ComplexMatrix> svd(freq_response(g, w));
    return svd.singularValues()(0);
}

std::vector<double> log_grid(double wlo, double whi, int k) {
    std::vector<double> w(k);
    const double a = std::log(wlo), b = std::log(whi);
    for (int i = 0; i < k; ++i) w[i] = std::exp(a + (b - a) * i / (k - 1));
    return w;
}

// --- discretization and simulation -----------------------------------------

void DiscreteStateSpace::reset() { x = Vector::Zero(Ad.rows()); }

void DiscreteStateSpace::reset(const Vector& x0) {
    if (x0.size() != Ad.rows()) throw ChannelMismatch("reset: state dimension mismatch");
    x = x0;
}

Vector DiscreteStateSpace::output(const Vector& u) const {
    if (u.size() != Bd.cols()) throw ChannelMismatch("output: input dimension mismatch");
    return C * x + D * u;
}

Vector DiscreteStateSpace::step(const Vector& u) {
    Vector y = output(u);
    x = Ad * x + Bd * u;
    return y;
}

DiscreteStateSpace c2d_zoh(const StateSpace& g, double dt) {
    if (dt <= 0.0) throw IllPosed("c2d_zoh: dt must be positive");
    DiscreteStateSpace d;
    const int n = g.n(), m = g.m();
    Matrix M = Matrix::Zero(n + m, n + m);
    M.topLeftCorner(n, n) = g.A * dt;
    M.topRightCorner(n, m) = g.B * dt;
    const Matrix E = M.exp();
    d.Ad = E.topLeftCorner(n, n);
    d.Bd = E.topRightCorner(n, m);
    d.C = g.C;
    d.D = g.D;
    d.dt = dt;
    d.x = Vector::Zero(n);
    return d;
}

// --- serialization ---------------------------------------------------------

namespace {

nlohmann::json matrix_to_json(const Matrix& M) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
        rows.push_back(row);
    }
    return rows;
}

Matrix matrix_from_json(const nlohmann::json& j, int rows, int cols) {
    Matrix M(rows, cols);
    if (static_cast<int>(j.size()) != rows) throw ChannelMismatch("matrix rows disagree with header");
    for (int i = 0; i < rows; ++i) {
        if (static_cast<int>(j[i].size()) != cols) throw ChannelMismatch("matrix cols disagree with header");
        for (int k = 0; k < cols; ++k) M(i, k) = j[i][k].get<double>();
    }
    return M;
}

nlohmann::json labels_to_json(const std::vector<ChannelGroup>& groups) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& g : groups) out.push_back({{"name", g.name}, {"size", g.size}});
    return out;
}

std::vector<ChannelGroup> labels_from_json(const nlohmann::json& j) {
    std::vector<ChannelGroup> out;
    for (const auto& item : j) out.push_back({item.at("name").get<std::string>(), item.at("size").get<int>()});
    return out;
}

}  // namespace

std::string to_text(const StateSpace& g) {
    nlohmann::json j;
    j["n"] = g.n();
    j["m"] = g.m();
    j["p"] = g.p();
    j["A"] = matrix_to_json(g.A);
    j["B"] = matrix_to_json(g.B);
    j["C"] = matrix_to_json(g.C);
    j["D"] = matrix_to_json(g.D);
    j["inputs"] = labels_to_json(g.inputs);
    j["outputs"] = labels_to_json(g.outputs);
    return j.dump(1);
}

StateSpace from_text(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    const int n = j.at("n").get<int>(), m = j.at("m").get<int>(), p = j.at("p").get<int>();
    StateSpace g;
    g.A = matrix_from_json(j.at("A"), n, n);
    g.B = matrix_from_json(j.at("B"), n, m);
    g.C = matrix_from_json(j.at("C"), p, n);
    g.D = matrix_from_json(j.at("D"), p, m);
    if (j.contains("inputs")) g.inputs = labels_from_json(j["inputs"]);
    if (j.contains("outputs")) g.outputs = labels_from_json(j["outputs"]);
    g.validate();
    return g;
}

}  // namespace ftc::ss
