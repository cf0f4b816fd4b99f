#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace ftc::ss {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using ComplexMatrix = Eigen::MatrixXcd;

// Thrown when an interconnection is attempted between systems whose input/
// output dimensions (or named channel groups) do not line up.
struct ChannelMismatch : std::runtime_error {
    explicit ChannelMismatch(const std::string& what) : std::runtime_error(what) {}
};

// Thrown when an operation needs an invertible feedthrough or a well-posed
// loop and the data does not provide one.
struct IllPosed : std::runtime_error {
    explicit IllPosed(const std::string& what) : std::runtime_error(what) {}
};

// Thrown by operations that require a stable system (H-infinity norm,
// balanced truncation) when fed one that is not.
struct UnstableInput : std::runtime_error {
    explicit UnstableInput(const std::string& what) : std::runtime_error(what) {}
};

// A named, contiguous slice of a system's input or output vector.
struct ChannelGroup {
    std::string name;
    int size = 0;
};

// Continuous-time LTI system  xdot = A x + B u,  y = C x + D u.
// Channel labels are optional; when present their sizes must sum to the
// corresponding dimension.  All interconnection helpers below operate on
// plain dimensions and clear labels unless stated otherwise.
struct StateSpace {
    Matrix A, B, C, D;
    std::vector<ChannelGroup> inputs;   // optional, sums to m()
    std::vector<ChannelGroup> outputs;  // optional, sums to p()

    StateSpace() = default;
    StateSpace(Matrix a, Matrix b, Matrix c, Matrix d);

    int n() const { return static_cast<int>(A.rows()); }
    int m() const { return static_cast<int>(B.cols()); }
    int p() const { return static_cast<int>(C.rows()); }

    // Throws ChannelMismatch if the four matrices or the labels disagree.
    void validate() const;

    // [offset, size] of a named channel group; throws ChannelMismatch if absent.
    std::pair<int, int> input_span(const std::string& name) const;
    std::pair<int, int> output_span(const std::string& name) const;

    // Subsystem keeping only the named input/output groups (state intact).
    StateSpace input_channels(const std::vector<std::string>& names) const;
    StateSpace output_channels(const std::vector<std::string>& names) const;

    // Subsystem by raw column/row ranges (labels cleared).
    StateSpace input_slice(int offset, int count) const;
    StateSpace output_slice(int offset, int count) const;
};

// --- constructors --------------------------------------------------------

StateSpace ss_static(const Matrix& D);
StateSpace ss_eye(int k);
StateSpace ss_zero(int p, int m);
// First-order lag  dc/(tau s + 1) replicated on k channels.
StateSpace ss_first_order(double dc, double tau, int k);

// --- block algebra -------------------------------------------------------

// Signal flows through `first`, then `second`:  result = second * first.
StateSpace cascade(const StateSpace& first, const StateSpace& second);
// Sum of responses, shared input and output dimensions.
StateSpace add(const StateSpace& a, const StateSpace& b);
StateSpace sub(const StateSpace& a, const StateSpace& b);
// [a b]: inputs stacked, outputs shared.
StateSpace hcat(const StateSpace& a, const StateSpace& b);
// [a; b]: outputs stacked, inputs shared.
StateSpace vcat(const StateSpace& a, const StateSpace& b);
// diag(a, b): inputs and outputs both stacked.
StateSpace diagcat(const StateSpace& a, const StateSpace& b);
// Constant gain composition  M * G  and  G * M.
StateSpace premultiply(const Matrix& M, const StateSpace& g);
StateSpace postmultiply(const StateSpace& g, const Matrix& M);
StateSpace negate(const StateSpace& g);
// Inverse system; requires square invertible D (throws IllPosed otherwise).
StateSpace inverse(const StateSpace& g);
// Negative feedback closure  y = G(u - H y); throws IllPosed if the loop
// feedthrough I + D_g D_h is singular.
StateSpace feedback(const StateSpace& g, const StateSpace& h);

// --- analysis ------------------------------------------------------------

Eigen::VectorXcd poles(const StateSpace& g);
double spectral_abscissa(const Matrix& A);
bool is_stable(const StateSpace& g, double margin = 0.0);
Matrix dcgain(const StateSpace& g);
// G(jw) for a single frequency.
ComplexMatrix freq_response(const StateSpace& g, double w);
// Largest singular value of G(jw).
double sigma_max(const StateSpace& g, double w);
// Log-spaced grid of k points over [wlo, whi].
std::vector<double> log_grid(double wlo, double whi, int k);

// --- discretization and simulation ----------------------------------------

// Zero-order-hold discretization via the block matrix exponential
//   exp([A B; 0 0] dt) = [Ad Bd; 0 I].
struct DiscreteStateSpace {
    Matrix Ad, Bd, C, D;
    double dt = 0.0;
    Vector x;  // current state

    void reset();
    void reset(const Vector& x0);
    // Output at the current sample for input u, then advance the state.
    Vector step(const Vector& u);
    // Output without advancing.
    Vector output(const Vector& u) const;
};

DiscreteStateSpace c2d_zoh(const StateSpace& g, double dt);

// --- serialization ---------------------------------------------------------

// Structured-text round trip (JSON): n/m/p, row-major A,B,C,D, channel labels.
std::string to_text(const StateSpace& g);
StateSpace from_text(const std::string& text);

}  // namespace ftc::ss
