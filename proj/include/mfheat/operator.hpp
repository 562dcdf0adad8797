#pragma once

#include "mfheat/elements.hpp"
#include "mfheat/materials.hpp"
#include "mfheat/mesh.hpp"

#include <array>
#include <cstddef>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

namespace mfheat {

enum class Strategy { flexible, singlepass, coalesced };
enum class Mode { A, L };

[[nodiscard]] std::string to_string(Strategy s);
[[nodiscard]] Strategy parse_strategy(const std::string& name);

struct OperatorParams {
    Strategy strategy = Strategy::coalesced;
    Mode mode = Mode::A;
    double theta = 0.5;
    double dt = 0.01;
    /// Mutation hook for the verification harness: negates the stiffness
    /// contribution in the matrix-free kernels only.
    bool flip_stiffness_sign = false;

    /// Factor multiplying k_e K_e: theta*dt for A, -(1-theta)*dt for L.
    [[nodiscard]] double stiffness_scale() const noexcept
    {
        return mode == Mode::A ? theta * dt : -(1.0 - theta) * dt;
    }
};

/// Shape of the abstract data-parallel schedule of the first pass.
struct WorkGroupPlan {
    Strategy strategy = Strategy::coalesced;
    std::size_t group_size = 0;    // work items per group
    std::size_t block_len = 0;     // cubes (1, 31) or vertices along x (64) per group
    std::size_t split_slots = 0;   // partial sums per vertex between passes
    std::size_t group_count = 0;
};

/// Coalesced-kernel geometry.
inline constexpr std::size_t kStripLength = 32;
inline constexpr std::size_t kStoredPerStrip = kStripLength - 2;
inline constexpr std::size_t kCubesPerGroup = kStripLength - 1;
inline constexpr std::size_t kScratchPerDof = 12;
inline constexpr std::size_t kFlexibleSlots = 24;
inline constexpr std::size_t kSinglePassBlock = 64;

template <class Real>
struct OperatorWorkspace {
    std::vector<Real> split;
};

/// Assembly-free action of A = M + theta dt K (mode A) or
/// L = M - (1 - theta) dt K (mode L) on nodal vectors. The global matrix is
/// never formed. Immutable after construction; apply() with the internal
/// workspace serializes callers, apply() with an explicit workspace does not.
template <class Real>
class SystemOperator {
public:
    /// evaluator may be bound to a larger global grid than spec (partitioned runs).
    SystemOperator(const GridSpec& spec, const MaterialEvaluator& evaluator, const OperatorParams& params);

    [[nodiscard]] const GridSpec& spec() const noexcept { return spec_; }
    [[nodiscard]] const OperatorParams& params() const noexcept { return params_; }
    [[nodiscard]] const MaterialEvaluator& evaluator() const noexcept { return eval_; }
    [[nodiscard]] std::size_t size() const noexcept { return spec_.vertex_count(); }
    [[nodiscard]] WorkGroupPlan plan() const;

    /// y = A x
    void apply(std::span<const Real> x, std::span<Real> y) const;
    void apply(std::span<const Real> x, std::span<Real> y, OperatorWorkspace<Real>& ws) const;

    /// y = c A x + b (the fused second pass). y may alias b but not x.
    void apply_fused(std::span<const Real> x, Real c, std::span<const Real> b, std::span<Real> y) const;
    void apply_fused(std::span<const Real> x, Real c, std::span<const Real> b, std::span<Real> y,
                     OperatorWorkspace<Real>& ws) const;

    /// Diagonal of the operator via the same traversal as the strategy.
    [[nodiscard]] std::vector<Real> jacobi_diagonal() const;

    /// Number of first-pass writes to each split slot (empty for the single-pass
    /// strategy, which writes each output once by construction and is audited
    /// per output entry instead). Runs the real kernel traversal with a counting sink.
    [[nodiscard]] std::vector<std::size_t> audit_writes() const;

    /// Scaled coefficients of element e (base grid numbering).
    [[nodiscard]] ElementCoefficients coefficients(std::size_t e) const;

private:
    template <class Sink, class Fetch>
    void flexible_pass1(std::size_t cube, Fetch&& fetch, Sink& sink, bool diagonal) const;
    template <class Sink, class Fetch>
    void coalesced_pass1(std::size_t group, Fetch&& fetch, Sink& sink, bool diagonal) const;
    template <class Fetch>
    Real singlepass_entry(std::size_t v, Fetch&& fetch, bool diagonal) const;

    void run(std::span<const Real> x, Real c, std::span<const Real> b, std::span<Real> y,
             OperatorWorkspace<Real>& ws, bool fused) const;
    [[nodiscard]] std::size_t split_slots() const noexcept;
    [[nodiscard]] std::size_t group_count() const noexcept;
    [[nodiscard]] ElementCoefficients cube_tet_coefficients(std::size_t i, std::size_t j, std::size_t k,
                                                            std::size_t t) const;

    GridSpec spec_;
    MaterialEvaluator eval_;
    OperatorParams params_;
    PaddedSpec padded_;
    double stiffness_scale_ = 0.0;

    // Fixed-grid shape matrices (strategies 2 and 3), stored as Real.
    std::array<std::array<Real, 16>, 6> mass_{};
    std::array<std::array<Real, 16>, 6> stiff_{};
    // Per-element scaled operator rows (strategy 1), element order.
    std::vector<std::array<Real, 16>> scaled_;

    // slot of (tet, local dof) within the 24 flexible slots of its vertex
    std::array<std::array<std::uint8_t, 4>, 6> flexible_slot_{};
    // slot of (tet, local dof) within the 12-entry coalesced scratch of its strip position
    std::array<std::array<std::uint8_t, 4>, 6> scratch_slot_{};

    struct SharedScratch {
        std::mutex mutex;
        OperatorWorkspace<Real> ws;
    };
    std::unique_ptr<SharedScratch> scratch_ = std::make_unique<SharedScratch>();
};

extern template class SystemOperator<double>;
extern template class SystemOperator<float>;

}  // namespace mfheat
