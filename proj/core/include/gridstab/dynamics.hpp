#pragma once

#include "gridstab/grid.hpp"

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace gridstab {

/// Homogeneous swing-equation parameters (per-unit).
struct SwingParams {
    double inertia = 1.0;   // M
    double damping = 0.1;   // droop alpha
    double coupling = 9.0;  // line parameter K

    void validate() const;
};

/// Phases (rad, unwrapped) and frequency deviations (rad/s).
struct GridState {
    std::vector<double> phase;
    std::vector<double> frequency;

    GridState() = default;
    explicit GridState(std::size_t n) : phase(n, 0.0), frequency(n, 0.0) {}
    GridState(std::vector<double> phi, std::vector<double> omega)
        : phase(std::move(phi)), frequency(std::move(omega))
    {
    }

    std::size_t size() const noexcept { return phase.size(); }
    bool is_finite() const noexcept;
};

struct IntegratorConfig {
    double t_end = 500.0;
    double abs_tol = 1e-7;
    double rel_tol = 1e-7;
    std::size_t max_steps = 10'000'000;

    void validate() const;
};

enum class TrialStatus {
    completed,   // reached t_end with a finite state
    diverged,    // state became nonfinite or the step size collapsed
    step_limit,  // max_steps accepted+rejected steps exhausted
};

struct TrialResult {
    bool converged = false;
    /// True when integration stopped before t_end because the trajectory was
    /// certified to remain synchronized (see SyncCertificate).
    bool certified_exit = false;
    double t_final = 0.0;
    /// Running maximum of |frequency| over nodes and sampled times; +inf
    /// when status != completed.
    double mfd = 0.0;
    TrialStatus status = TrialStatus::completed;
    /// State at t_final (equal to t_end unless certified_exit).
    GridState final_state;
    std::size_t accepted_steps = 0;
    std::size_t rejected_steps = 0;
};

/// Frequency below which a final state counts as returned to sync.
inline constexpr double kSyncFrequencyThreshold = 0.1;

/// d(phase)/dt = frequency;
/// M d(frequency)/dt = P - alpha frequency - K sum_j A_ij sin(phase_i - phase_j).
/// Throws DimensionError when state and grid sizes disagree.
void rhs(const GridState& state, const PowerGrid& grid, const SwingParams& params,
         std::vector<double>& dphase, std::vector<double>& dfrequency);

/// max_i |P_i - K sum_j A_ij sin(phase_i - phase_j)|.
double power_flow_residual(std::span<const double> phase, const PowerGrid& grid, const SwingParams& params);

/// Stable synchronous operating point, gauge-fixed so phase[0] == 0.
///
/// Relaxes the system with damping multiplied by 10 from the all-zero state
/// until max |frequency| < 1e-6, then polishes the power-flow equation with
/// Newton's method to residual < 1e-10. Throws BalanceError when injections
/// do not sum to zero and NoSyncStateError when relaxation or polishing fails.
std::vector<double> find_fixed_point(const PowerGrid& grid, const SwingParams& params);

/// Energy certificate that lets a trial stop early once it has provably
/// returned to synchrony.
///
/// The swing equation has the Lyapunov function
///   E = sum_i M w_i^2 / 2 + sum_e K [cos t*_e - cos(t*_e + y_e) - sin t*_e y_e],
/// with y_e the deviation of edge e's phase difference from the fixed point
/// value t*_e, and dE/dt = -alpha sum_i w_i^2 <= 0. On the convex region
/// R = {|y_e| <= delta for all e} with |t*_e| + delta < pi/2 the potential
/// part is convex, vanishes only at the fixed point (up to a uniform shift),
/// and is at least region_energy() on the boundary of R. A state inside R
/// with E below that level can therefore never leave R, converges to the
/// fixed point, and satisfies |w_i(t)| <= sqrt(2 E / M) for all later t.
class SyncCertificate {
public:
    SyncCertificate() = default;
    SyncCertificate(const PowerGrid& grid, const SwingParams& params, std::span<const double> fixed_point);

    /// False when some fixed-point line angle is too close to pi/2.
    bool enabled() const noexcept { return enabled_; }
    double region_energy() const noexcept { return region_energy_; }
    double half_width() const noexcept { return delta_; }

    /// E of the 2*pi-equivalent representative of (phase, frequency) closest
    /// to the fixed point, or nullopt when that representative is outside R.
    std::optional<double> relative_energy(std::span<const double> phase, std::span<const double> frequency) const;

    /// True when the state is certified to stay synchronized with every
    /// future |frequency| below min(0.1, frequency_cap).
    bool certifies(std::span<const double> phase, std::span<const double> frequency, double frequency_cap) const;

private:
    bool enabled_ = false;
    double inertia_ = 1.0;
    double coupling_ = 1.0;
    double delta_ = 0.0;
    double region_energy_ = 0.0;
    std::vector<double> fixed_point_;
    std::vector<Edge> edges_;
    std::vector<double> sin_star_;
    std::vector<double> cos_star_;
    // Breadth-first spanning tree used to lift phases: order_[k] has parent parent_[k].
    std::vector<std::size_t> order_;
    std::vector<std::size_t> parent_;
};

/// Called at t = 0 and after each accepted step with (t, phase, frequency).
using TrajectoryObserver =
    std::function<void(double, std::span<const double>, std::span<const double>)>;

/// Integrates the swing equation with an adaptive Dormand-Prince 5(4) scheme.
///
/// mfd is sampled at t = 0 and at the end of every accepted step, and
/// refined on the fourth-order continuous extension wherever a node's
/// acceleration changes sign inside an accepted step. It is
/// therefore a close approximation of the continuous maximum, not an exact
/// bound. The returned `converged` flag is classify_trial(final_state).
///
/// With a certificate, integration may stop before t_end once the state is
/// certified synchronous with all future frequencies below both 0.1 and the
/// mfd recorded so far; `converged` and `mfd` are then exactly what the
/// remaining integration would have produced for the exact flow.
TrialResult integrate(const PowerGrid& grid, const SwingParams& params, const GridState& initial,
                      const IntegratorConfig& cfg, const TrajectoryObserver& observer = {},
                      const SyncCertificate* certificate = nullptr);

/// True iff every |frequency| < 0.1 (strict).
bool classify_trial(const GridState& final_state);

/// Writes a trajectory CSV header "t,phi_0..,omega_0.." and returns an
/// observer that appends one row per call.
TrajectoryObserver csv_trajectory_writer(std::ostream& out, std::size_t n);

}  // namespace gridstab
