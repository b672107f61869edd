#include "gridstab/dynamics.hpp"

#include "gridstab/error.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <ostream>
#include <string>

namespace gridstab {

void SwingParams::validate() const
{
    auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
    if (!positive(inertia) || !positive(damping) || !positive(coupling)) {
        throw ConfigError("swing parameters M, alpha and K must be finite and strictly positive");
    }
}

bool GridState::is_finite() const noexcept
{
    auto finite = [](double v) { return std::isfinite(v); };
    return std::all_of(phase.begin(), phase.end(), finite) &&
           std::all_of(frequency.begin(), frequency.end(), finite);
}

void IntegratorConfig::validate() const
{
    if (!(t_end > 0.0) || !std::isfinite(t_end)) {
        throw ConfigError("integrator t_end must be positive");
    }
    if (!(abs_tol > 0.0) || !(rel_tol > 0.0)) {
        throw ConfigError("integrator tolerances must be positive");
    }
    if (max_steps == 0) {
        throw ConfigError("integrator max_steps must be positive");
    }
}

namespace {

// sin with Cody-Waite reduction by pi/2 and the fdlibm kernel polynomials;
// branch-free so the edge loop vectorizes. Absolute error <= 2.3e-16 for
// |x| < 2^20, which covers unwrapped phase differences over any trial.
inline double fast_sin(double x)
{
    constexpr double two_over_pi = 0.63661977236758134308;
    constexpr double shifter = 0x1.8p52;
    const double shifted = x * two_over_pi + shifter;
    const double q = shifted - shifter;
    const auto quadrant = std::bit_cast<std::uint64_t>(shifted);
    double r = x - q * 1.57079632673412561417e+00;
    r -= q * 6.07710050630396597660e-11;
    r -= q * 2.02226624871116645580e-21;
    const double z = r * r;
    const double sin_r =
        r + r * z *
                (-1.66666666666666324348e-01 +
                 z * (8.33333333332248946124e-03 +
                      z * (-1.98412698298579493134e-04 +
                           z * (2.75573137070700676789e-06 +
                                z * (-2.50507602534068634195e-08 + z * 1.58969099521155010221e-10)))));
    const double cos_r =
        1.0 - 0.5 * z +
        z * z *
            (4.16666666666666019037e-02 +
             z * (-1.38888888888741095749e-03 +
                  z * (2.48015872894767294178e-05 +
                       z * (-2.75573143513906633035e-07 +
                            z * (2.08757232129817482790e-09 + z * -1.13596475577881948265e-11)))));
    const double v = (quadrant & 1) ? cos_r : sin_r;
    return (quadrant & 2) ? -v : v;
}

// Flat right-hand side on y = [phase (n) | frequency (n)].
class SwingSystem {
public:
    SwingSystem(const PowerGrid& grid, const SwingParams& params, double damping_scale = 1.0)
        : n_(grid.size()),
          injection_(grid.injections().begin(), grid.injections().end()),
          inv_inertia_(1.0 / params.inertia),
          damping_(params.damping * damping_scale),
          coupling_(params.coupling)
    {
        from_.reserve(grid.edge_count());
        to_.reserve(grid.edge_count());
        for (const auto& [a, b] : grid.edges()) {
            from_.push_back(a);
            to_.push_back(b);
        }
        flow_.resize(grid.edge_count());
    }

    std::size_t nodes() const { return n_; }

    void operator()(const double* y, double* dy) const
    {
        const double* phase = y;
        const double* freq = y + n_;
        double* acc = dy + n_;
        for (std::size_t i = 0; i < n_; ++i) {
            dy[i] = freq[i];
            acc[i] = injection_[i] - damping_ * freq[i];
        }
        const std::size_t m = from_.size();
        double* flow = flow_.data();
        for (std::size_t e = 0; e < m; ++e) {
            flow[e] = phase[from_[e]] - phase[to_[e]];
        }
        for (std::size_t e = 0; e < m; ++e) {
            flow[e] = coupling_ * fast_sin(flow[e]);
        }
        for (std::size_t e = 0; e < m; ++e) {
            acc[from_[e]] -= flow[e];
            acc[to_[e]] += flow[e];
        }
        for (std::size_t i = 0; i < n_; ++i) {
            acc[i] *= inv_inertia_;
        }
    }

private:
    std::size_t n_;
    std::vector<double> injection_;
    std::vector<std::size_t> from_;
    std::vector<std::size_t> to_;
    mutable std::vector<double> flow_;  // per-edge scratch; one system per integration
    double inv_inertia_;
    double damping_;
    double coupling_;
};

// Dormand-Prince 5(4) coefficients.
constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0, c5 = 8.0 / 9.0;
constexpr double a21 = 1.0 / 5.0;
constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                 a54 = -212.0 / 729.0;
constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0, a64 = 49.0 / 176.0,
                 a65 = -5103.0 / 18656.0;
constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0, b5 = -2187.0 / 6784.0,
                 b6 = 11.0 / 84.0;
constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0, e5 = -17253.0 / 339200.0,
                 e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
// Continuous extension (Hairer, Norsett & Wanner, dopri5 contd5).
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

enum class StepOutcome { reached, diverged, step_limit, certified };

using StopPredicate = std::function<bool(const std::vector<double>&, double)>;

class Dopri5 {
public:
    Dopri5(const SwingSystem& system, std::vector<double> y0, double abs_tol, double rel_tol)
        : sys_(system), n_(system.nodes()), dim_(2 * system.nodes()), atol_(abs_tol), rtol_(rel_tol),
          y_(std::move(y0)), k1_(dim_), k2_(dim_), k3_(dim_), k4_(dim_), k5_(dim_), k6_(dim_), k7_(dim_),
          stage_(dim_), y_new_(dim_)
    {
        sys_(y_.data(), k1_.data());
        if (track_mfd_) {
            mfd_ = max_abs_frequency(y_.data());
        }
    }

    void enable_mfd(bool on)
    {
        track_mfd_ = on;
        mfd_ = on ? max_abs_frequency(y_.data()) : 0.0;
    }

    double time() const { return t_; }
    const std::vector<double>& state() const { return y_; }
    double mfd() const { return mfd_; }
    std::size_t accepted() const { return accepted_; }
    std::size_t rejected() const { return rejected_; }

    StepOutcome advance_to(double t_target, std::size_t max_steps, const TrajectoryObserver& observer,
                           const StopPredicate& stop = {})
    {
        constexpr std::size_t kStopCheckInterval = 8;
        if (h_ <= 0.0) {
            h_ = initial_step(t_target - t_);
        }
        bool last_rejected = false;
        while (t_ < t_target) {
            if (accepted_ + rejected_ >= max_steps) {
                return StepOutcome::step_limit;
            }
            bool final_step = false;
            double h = h_;
            if (t_ + h >= t_target) {
                h = t_target - t_;
                final_step = true;
            }
            if (!(h > 1e-14 * std::max(1.0, std::abs(t_)))) {
                return StepOutcome::diverged;
            }

            const double err = attempt(h);
            if (err <= 1.0) {
                ++accepted_;
                if (track_mfd_) {
                    mfd_ = std::max(mfd_, max_abs_frequency(y_new_.data()));
                    refine_mfd(h);
                }
                t_ = final_step ? t_target : t_ + h;
                std::swap(y_, y_new_);
                std::swap(k1_, k7_);
                if (observer) {
                    observer(t_, std::span<const double>(y_.data(), n_),
                             std::span<const double>(y_.data() + n_, n_));
                }
                if (stop && accepted_ % kStopCheckInterval == 0 && t_ < t_target && stop(y_, mfd_)) {
                    return StepOutcome::certified;
                }
                double fac = err == 0.0 ? kFacMax : std::clamp(kSafety * std::pow(err, -0.2), kFacMin, kFacMax);
                if (last_rejected) {
                    fac = std::min(fac, 1.0);
                }
                // Keep the controller's step when the previous one was clipped to hit t_target.
                h_ = final_step ? std::max(h_, h * fac) : h * fac;
                last_rejected = false;
            } else {
                ++rejected_;
                const double fac = std::isfinite(err) ? std::clamp(kSafety * std::pow(err, -0.2), kFacMin, 1.0)
                                                      : kFacMin;
                h_ = h * fac;
                last_rejected = true;
            }
        }
        return StepOutcome::reached;
    }

private:
    static constexpr double kSafety = 0.9;
    static constexpr double kFacMin = 0.2;
    static constexpr double kFacMax = 10.0;

    double max_abs_frequency(const double* y) const
    {
        double m = 0.0;
        for (std::size_t i = n_; i < dim_; ++i) {
            m = std::max(m, std::abs(y[i]));
        }
        return m;
    }

    double scale(double a, double b) const { return atol_ + rtol_ * std::max(std::abs(a), std::abs(b)); }

    double rms_scaled(const std::vector<double>& v) const
    {
        double sum = 0.0;
        for (std::size_t i = 0; i < dim_; ++i) {
            const double s = v[i] / scale(y_[i], y_[i]);
            sum += s * s;
        }
        return std::sqrt(sum / static_cast<double>(dim_));
    }

    // Hairer's starting step heuristic.
    double initial_step(double span)
    {
        const double d0 = rms_scaled(y_);
        const double d1n = rms_scaled(k1_);
        double h0 = (d0 < 1e-5 || d1n < 1e-5) ? 1e-6 : 0.01 * d0 / d1n;
        h0 = std::min(h0, span);
        for (std::size_t i = 0; i < dim_; ++i) {
            stage_[i] = y_[i] + h0 * k1_[i];
        }
        sys_(stage_.data(), k2_.data());
        double diff = 0.0;
        for (std::size_t i = 0; i < dim_; ++i) {
            const double s = (k2_[i] - k1_[i]) / scale(y_[i], y_[i]);
            diff += s * s;
        }
        const double d2 = std::sqrt(diff / static_cast<double>(dim_)) / h0;
        const double dmax = std::max(d1n, d2);
        const double h1 = dmax <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dmax, 0.2);
        return std::min({100.0 * h0, h1, span});
    }

    // Computes stages and the candidate end state; returns the scaled error norm.
    double attempt(double h)
    {
        auto eval_stage = [&](std::vector<double>& out) { sys_(stage_.data(), out.data()); };
        for (std::size_t i = 0; i < dim_; ++i) {
            stage_[i] = y_[i] + h * a21 * k1_[i];
        }
        eval_stage(k2_);
        for (std::size_t i = 0; i < dim_; ++i) {
            stage_[i] = y_[i] + h * (a31 * k1_[i] + a32 * k2_[i]);
        }
        eval_stage(k3_);
        for (std::size_t i = 0; i < dim_; ++i) {
            stage_[i] = y_[i] + h * (a41 * k1_[i] + a42 * k2_[i] + a43 * k3_[i]);
        }
        eval_stage(k4_);
        for (std::size_t i = 0; i < dim_; ++i) {
            stage_[i] = y_[i] + h * (a51 * k1_[i] + a52 * k2_[i] + a53 * k3_[i] + a54 * k4_[i]);
        }
        eval_stage(k5_);
        for (std::size_t i = 0; i < dim_; ++i) {
            stage_[i] = y_[i] + h * (a61 * k1_[i] + a62 * k2_[i] + a63 * k3_[i] + a64 * k4_[i] + a65 * k5_[i]);
        }
        eval_stage(k6_);
        for (std::size_t i = 0; i < dim_; ++i) {
            y_new_[i] = y_[i] + h * (b1 * k1_[i] + b3 * k3_[i] + b4 * k4_[i] + b5 * k5_[i] + b6 * k6_[i]);
        }
        sys_(y_new_.data(), k7_.data());

        double sum = 0.0;
        for (std::size_t i = 0; i < dim_; ++i) {
            const double err =
                h * (e1 * k1_[i] + e3 * k3_[i] + e4 * k4_[i] + e5 * k5_[i] + e6 * k6_[i] + e7 * k7_[i]);
            const double s = err / scale(y_[i], y_new_[i]);
            sum += s * s;
        }
        const double norm = std::sqrt(sum / static_cast<double>(dim_));
        return std::isfinite(norm) ? norm : std::numeric_limits<double>::infinity();
    }

    // Locates interior frequency extrema of an accepted step on the
    // continuous extension. A step is searched when the acceleration of a
    // node changes sign at any stage. Called before y_/y_new_ are swapped.
    void refine_mfd(double h)
    {
        for (std::size_t j = n_; j < dim_; ++j) {
            const double acc0 = k1_[j];
            const bool turns = acc0 * k2_[j] < 0.0 || acc0 * k3_[j] < 0.0 || acc0 * k4_[j] < 0.0 ||
                               acc0 * k5_[j] < 0.0 || acc0 * k6_[j] < 0.0 || acc0 * k7_[j] < 0.0;
            if (!turns) {
                continue;
            }
            const double v0 = y_[j];
            const double v1 = y_new_[j];
            const double acc_max = std::max({std::abs(acc0), std::abs(k2_[j]), std::abs(k3_[j]), std::abs(k4_[j]),
                                             std::abs(k5_[j]), std::abs(k6_[j]), std::abs(k7_[j])});
            const double bound = std::max(std::abs(v0), std::abs(v1)) + 0.75 * h * acc_max;
            if (bound <= mfd_) {
                continue;
            }
            const double r2 = v1 - v0;
            const double r3 = h * acc0 - r2;
            const double r4 = r2 - h * k7_[j] - r3;
            const double r5 =
                h * (d1 * k1_[j] + d3 * k3_[j] + d4 * k4_[j] + d5 * k5_[j] + d6 * k6_[j] + d7 * k7_[j]);
            auto value = [&](double th) {
                const double s1 = 1.0 - th;
                return std::abs(v0 + th * (r2 + s1 * (r3 + th * (r4 + s1 * r5))));
            };
            // Coarse scan, then golden-section search around the best node.
            constexpr int kScan = 8;
            int best = 0;
            double best_value = -1.0;
            for (int k = 1; k < kScan; ++k) {
                const double f = value(static_cast<double>(k) / kScan);
                if (f > best_value) {
                    best_value = f;
                    best = k;
                }
            }
            constexpr double inv_phi = 0.6180339887498949;
            double lo = static_cast<double>(best - 1) / kScan;
            double hi = static_cast<double>(best + 1) / kScan;
            double x1 = hi - inv_phi * (hi - lo);
            double x2 = lo + inv_phi * (hi - lo);
            double f1 = value(x1);
            double f2 = value(x2);
            for (int it = 0; it < 36; ++it) {
                if (f1 < f2) {
                    lo = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = lo + inv_phi * (hi - lo);
                    f2 = value(x2);
                } else {
                    hi = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = hi - inv_phi * (hi - lo);
                    f1 = value(x1);
                }
            }
            mfd_ = std::max({mfd_, best_value, f1, f2});
        }
    }

    const SwingSystem& sys_;
    std::size_t n_;
    std::size_t dim_;
    double atol_;
    double rtol_;
    double t_ = 0.0;
    double h_ = 0.0;
    std::vector<double> y_;
    std::vector<double> k1_, k2_, k3_, k4_, k5_, k6_, k7_;
    std::vector<double> stage_;
    std::vector<double> y_new_;
    bool track_mfd_ = false;
    double mfd_ = 0.0;
    std::size_t accepted_ = 0;
    std::size_t rejected_ = 0;
};

void check_dimensions(const GridState& state, const PowerGrid& grid)
{
    if (state.phase.size() != grid.size() || state.frequency.size() != grid.size()) {
        throw DimensionError("state has dimension (" + std::to_string(state.phase.size()) + ", " +
                             std::to_string(state.frequency.size()) + "), grid has " +
                             std::to_string(grid.size()) + " nodes");
    }
}

std::vector<double> pack(const GridState& state)
{
    std::vector<double> y(state.phase);
    y.insert(y.end(), state.frequency.begin(), state.frequency.end());
    return y;
}

GridState unpack(const std::vector<double>& y, std::size_t n)
{
    return GridState(std::vector<double>(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(n)),
                     std::vector<double>(y.begin() + static_cast<std::ptrdiff_t>(n), y.end()));
}

}  // namespace

void rhs(const GridState& state, const PowerGrid& grid, const SwingParams& params, std::vector<double>& dphase,
         std::vector<double>& dfrequency)
{
    check_dimensions(state, grid);
    const std::size_t n = grid.size();
    const SwingSystem system(grid, params);
    const std::vector<double> y = pack(state);
    std::vector<double> dy(2 * n);
    system(y.data(), dy.data());
    dphase.assign(dy.begin(), dy.begin() + static_cast<std::ptrdiff_t>(n));
    dfrequency.assign(dy.begin() + static_cast<std::ptrdiff_t>(n), dy.end());
}

double power_flow_residual(std::span<const double> phase, const PowerGrid& grid, const SwingParams& params)
{
    if (phase.size() != grid.size()) {
        throw DimensionError("phase vector length does not match grid");
    }
    std::vector<double> mismatch(grid.injections().begin(), grid.injections().end());
    for (const auto& [a, b] : grid.edges()) {
        const double flow = params.coupling * std::sin(phase[a] - phase[b]);
        mismatch[a] -= flow;
        mismatch[b] += flow;
    }
    double worst = 0.0;
    for (double m : mismatch) {
        worst = std::max(worst, std::abs(m));
    }
    return worst;
}

std::vector<double> find_fixed_point(const PowerGrid& grid, const SwingParams& params)
{
    params.validate();
    const std::size_t n = grid.size();
    if (n == 0) {
        throw DimensionError("cannot find a fixed point of an empty grid");
    }
    double total = 0.0;
    double magnitude = 0.0;
    for (double p : grid.injections()) {
        total += p;
        magnitude += std::abs(p);
    }
    if (std::abs(total) > 1e-12 * std::max(1.0, magnitude)) {
        throw BalanceError("fixed point requires injections summing to zero");
    }
    if (!grid.is_connected()) {
        throw ConnectivityError("fixed point requires a connected grid");
    }

    // Damped relaxation toward the stable operating point.
    constexpr double kDampingBoost = 10.0;
    constexpr double kChunk = 10.0;
    constexpr double kBudget = 5000.0;
    constexpr double kRelaxedFrequency = 1e-6;
    const SwingSystem relaxed(grid, params, kDampingBoost);
    Dopri5 stepper(relaxed, std::vector<double>(2 * n, 0.0), 1e-10, 1e-10);
    bool settled = false;
    for (double t = 0.0; t < kBudget; t += kChunk) {
        const double frequency = [&] {
            double m = 0.0;
            for (std::size_t i = n; i < 2 * n; ++i) {
                m = std::max(m, std::abs(stepper.state()[i]));
            }
            return m;
        }();
        if (frequency < kRelaxedFrequency && t > 0.0) {
            settled = true;
            break;
        }
        if (stepper.advance_to(t + kChunk, 10'000'000, {}) != StepOutcome::reached) {
            break;
        }
    }
    if (!settled) {
        throw NoSyncStateError("relaxation did not settle to a synchronous state");
    }

    std::vector<double> phase(stepper.state().begin(), stepper.state().begin() + static_cast<std::ptrdiff_t>(n));
    const double reference = phase[0];
    for (double& p : phase) {
        p -= reference;
    }

    // Newton polish on the reduced power-flow equations (phase[0] fixed).
    constexpr double kTarget = 1e-10;
    const auto m = static_cast<Eigen::Index>(n - 1);
    for (int iter = 0; iter < 50; ++iter) {
        const double residual = power_flow_residual(phase, grid, params);
        if (residual < 0.1 * kTarget || m == 0) {
            break;
        }
        Eigen::VectorXd mismatch(m);
        for (Eigen::Index i = 0; i < m; ++i) {
            mismatch(i) = grid.injections()[static_cast<std::size_t>(i + 1)];
        }
        std::vector<Eigen::Triplet<double>> entries;
        entries.reserve(4 * grid.edge_count());
        for (const auto& [a, b] : grid.edges()) {
            const double diff = phase[a] - phase[b];
            const double flow = params.coupling * std::sin(diff);
            const double weight = params.coupling * std::cos(diff);
            const auto ra = static_cast<Eigen::Index>(a) - 1;
            const auto rb = static_cast<Eigen::Index>(b) - 1;
            if (ra >= 0) {
                mismatch(ra) -= flow;
                entries.emplace_back(ra, ra, weight);
            }
            if (rb >= 0) {
                mismatch(rb) += flow;
                entries.emplace_back(rb, rb, weight);
            }
            if (ra >= 0 && rb >= 0) {
                entries.emplace_back(ra, rb, -weight);
                entries.emplace_back(rb, ra, -weight);
            }
        }
        Eigen::SparseMatrix<double> jac(m, m);
        jac.setFromTriplets(entries.begin(), entries.end());
        Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
        lu.compute(jac);
        if (lu.info() != Eigen::Success) {
            throw NoSyncStateError("power-flow Jacobian is singular at the relaxed state");
        }
        const Eigen::VectorXd step = lu.solve(mismatch);
        if (lu.info() != Eigen::Success || !step.allFinite()) {
            throw NoSyncStateError("Newton polish failed");
        }
        for (Eigen::Index i = 0; i < m; ++i) {
            phase[static_cast<std::size_t>(i + 1)] += step(i);
        }
    }
    if (!(power_flow_residual(phase, grid, params) < kTarget)) {
        throw NoSyncStateError("Newton polish did not reach the residual target");
    }
    return phase;
}

TrialResult integrate(const PowerGrid& grid, const SwingParams& params, const GridState& initial,
                      const IntegratorConfig& cfg, const TrajectoryObserver& observer,
                      const SyncCertificate* certificate)
{
    check_dimensions(initial, grid);
    params.validate();
    cfg.validate();

    TrialResult result;
    if (!initial.is_finite()) {
        result.status = TrialStatus::diverged;
        result.mfd = std::numeric_limits<double>::infinity();
        result.final_state = initial;
        result.converged = false;
        return result;
    }

    const SwingSystem system(grid, params);
    Dopri5 stepper(system, pack(initial), cfg.abs_tol, cfg.rel_tol);
    stepper.enable_mfd(true);
    if (observer) {
        observer(0.0, initial.phase, initial.frequency);
    }
    StopPredicate stop;
    if (certificate != nullptr && certificate->enabled()) {
        const std::size_t n = grid.size();
        stop = [certificate, n](const std::vector<double>& y, double mfd) {
            return certificate->certifies(std::span<const double>(y.data(), n),
                                          std::span<const double>(y.data() + n, n), mfd);
        };
    }
    const StepOutcome outcome = stepper.advance_to(cfg.t_end, cfg.max_steps, observer, stop);

    result.final_state = unpack(stepper.state(), grid.size());
    result.t_final = stepper.time();
    result.accepted_steps = stepper.accepted();
    result.rejected_steps = stepper.rejected();
    result.certified_exit = outcome == StepOutcome::certified;
    if ((outcome == StepOutcome::reached || outcome == StepOutcome::certified) && result.final_state.is_finite()) {
        result.status = TrialStatus::completed;
        result.mfd = stepper.mfd();
        result.converged = classify_trial(result.final_state);
    } else {
        result.status = outcome == StepOutcome::step_limit ? TrialStatus::step_limit : TrialStatus::diverged;
        result.mfd = std::numeric_limits<double>::infinity();
        result.converged = false;
    }
    return result;
}

SyncCertificate::SyncCertificate(const PowerGrid& grid, const SwingParams& params,
                                 std::span<const double> fixed_point)
    : inertia_(params.inertia), coupling_(params.coupling), fixed_point_(fixed_point.begin(), fixed_point.end()),
      edges_(grid.edges().begin(), grid.edges().end())
{
    if (fixed_point.size() != grid.size()) {
        throw DimensionError("fixed point length does not match grid");
    }
    if (!grid.is_connected()) {
        return;
    }
    double worst_angle = 0.0;
    for (const auto& [a, b] : edges_) {
        const double angle = fixed_point[a] - fixed_point[b];
        sin_star_.push_back(std::sin(angle));
        cos_star_.push_back(std::cos(angle));
        worst_angle = std::max(worst_angle, std::abs(std::remainder(angle, 2.0 * std::numbers::pi)));
    }
    const double slack = std::numbers::pi / 2.0 - worst_angle;
    if (!(slack > 1e-3)) {
        return;
    }
    delta_ = std::min(1.0, 0.9 * slack);

    region_energy_ = std::numeric_limits<double>::infinity();
    for (std::size_t e = 0; e < edges_.size(); ++e) {
        for (const double y : {delta_, -delta_}) {
            const double c = std::cos(y);
            const double s = std::sin(y);
            // cos t* - cos(t* + y) - sin t* y, with cos(t* + y) expanded.
            const double g = coupling_ * (cos_star_[e] * (1.0 - c) + sin_star_[e] * (s - y));
            region_energy_ = std::min(region_energy_, g);
        }
    }
    if (edges_.empty()) {
        region_energy_ = 0.0;
    }

    const std::size_t n = grid.size();
    std::vector<bool> seen(n, false);
    order_.push_back(0);
    parent_.push_back(0);
    seen[0] = true;
    for (std::size_t head = 0; head < order_.size(); ++head) {
        const std::size_t u = order_[head];
        for (std::size_t v : grid.neighbors(u)) {
            if (!seen[v]) {
                seen[v] = true;
                order_.push_back(v);
                parent_.push_back(u);
            }
        }
    }
    enabled_ = region_energy_ > 0.0;
}

std::optional<double> SyncCertificate::relative_energy(std::span<const double> phase,
                                                       std::span<const double> frequency) const
{
    const std::size_t n = fixed_point_.size();
    if (!enabled_ || phase.size() != n || frequency.size() != n) {
        return std::nullopt;
    }
    // Lift deviations along the spanning tree so tree edges have |y| <= pi.
    std::vector<double> lifted(n, 0.0);
    auto deviation = [&](std::size_t i) { return phase[i] - fixed_point_[i]; };
    for (std::size_t k = 1; k < order_.size(); ++k) {
        const std::size_t v = order_[k];
        const std::size_t u = parent_[k];
        lifted[v] = lifted[u] + std::remainder(deviation(v) - deviation(u), 2.0 * std::numbers::pi);
    }
    double potential = 0.0;
    for (std::size_t e = 0; e < edges_.size(); ++e) {
        const auto [a, b] = edges_[e];
        const double y = lifted[a] - lifted[b];
        if (!(std::abs(y) <= delta_)) {
            return std::nullopt;
        }
        potential += coupling_ * (cos_star_[e] * (1.0 - std::cos(y)) + sin_star_[e] * (std::sin(y) - y));
    }
    double kinetic = 0.0;
    for (double w : frequency) {
        kinetic += 0.5 * inertia_ * w * w;
    }
    return kinetic + potential;
}

bool SyncCertificate::certifies(std::span<const double> phase, std::span<const double> frequency,
                                double frequency_cap) const
{
    const double cap = std::min(kSyncFrequencyThreshold, frequency_cap);
    if (!enabled_ || !(cap > 0.0)) {
        return false;
    }
    // Cheap rejection before lifting phases.
    for (double w : frequency) {
        if (std::abs(w) >= cap) {
            return false;
        }
    }
    const auto energy = relative_energy(phase, frequency);
    if (!energy) {
        return false;
    }
    constexpr double kMargin = 0.9;
    const double limit = kMargin * std::min(region_energy_, 0.5 * inertia_ * cap * cap);
    return *energy < limit;
}

bool classify_trial(const GridState& final_state)
{
    return std::all_of(final_state.frequency.begin(), final_state.frequency.end(),
                       [](double w) { return std::abs(w) < kSyncFrequencyThreshold; });
}

TrajectoryObserver csv_trajectory_writer(std::ostream& out, std::size_t n)
{
    out << 't';
    for (std::size_t i = 0; i < n; ++i) {
        out << ",phi_" << i;
    }
    for (std::size_t i = 0; i < n; ++i) {
        out << ",omega_" << i;
    }
    out << '\n';
    out.precision(17);
    return [&out](double t, std::span<const double> phase, std::span<const double> freq) {
        out << t;
        for (double v : phase) {
            out << ',' << v;
        }
        for (double v : freq) {
            out << ',' << v;
        }
        out << '\n';
    };
}

}  // namespace gridstab
