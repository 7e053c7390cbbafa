#ifndef LATMIX_BILLIARDS_HPP
#define LATMIX_BILLIARDS_HPP

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "latmix/cocycle.hpp"
#include "latmix/geometry.hpp"
#include "latmix/lattice.hpp"

namespace latmix {

// Domain flavour. The fundamental cell is [0,1]^2; disks repeat over the
// lattice translates admitted by the flavour. Flat domain walls reflect the
// particle in flight; only disk hits are collision-map events.
//   Plane     : R^2,            cells Z^2            (d1=0, d2=2)
//   Tube      : R x [0,1],      cells Z              (d1=0, d2=1)
//   HalfStrip : R+ x [0,1],     cells Z+             (d1=1, d2=0)
//   HalfPlane : R+ x R,         cells Z+ x Z         (d1=1, d2=1)
enum class Geometry { Plane, Tube, HalfStrip, HalfPlane };

struct LocalMod {
    std::vector<Disk> added;       // extra disks, coordinates local to the cell
    std::vector<int> removed;      // pattern indices removed in this cell
};

struct HorizonDecl {
    bool finite = true;
    double bound = 10.0;  // declared free-path bound (cells)
};

// Periodic disk configuration with optional per-cell modifications.
//
// Placement rule: pattern disk k is present at a lattice translate unless the
// translated disk would cross a domain wall (it is then omitted in that cell)
// or the cell's LocalMod removes it. Disk centers live in [0,1)^2.
class ScattererConfig {
public:
    ScattererConfig(std::vector<Disk> pattern, Geometry geometry, HorizonDecl horizon,
                    std::map<LatticeVector, LocalMod> mods = {});

    static ScattererConfig reference(Geometry g = Geometry::Plane);      // r=.4 @ (0,0), r=.3 @ (.5,.5)
    static ScattererConfig galton_reference();                           // HalfPlane variant, no corridors
    static ScattererConfig half_strip_single();                          // r=.4 @ (.5,.5), unbounded horizon
    static ScattererConfig single_disk(double radius);                   // open corridors (horizon test)

    Geometry geometry() const { return geometry_; }
    LatticeSplit split() const;
    const HorizonDecl& horizon() const { return horizon_; }
    const std::vector<Disk>& pattern() const { return pattern_; }
    const std::map<LatticeVector, LocalMod>& mods() const { return mods_; }
    double min_gap() const { return min_gap_; }
    double max_radius() const { return max_radius_; }

    // Lattice cell <-> geometric translate (i,j).
    LatticeVector cell_of_translate(std::int64_t i, std::int64_t j) const;
    bool translate_exists(std::int64_t i, std::int64_t j) const;
    void translate_of_cell(const LatticeVector& z, std::int64_t& i, std::int64_t& j) const;
    bool cell_in_lattice(const LatticeVector& z) const;

    bool has_wall_x0() const { return geometry_ == Geometry::HalfStrip || geometry_ == Geometry::HalfPlane; }
    bool has_walls_y() const { return geometry_ == Geometry::Tube || geometry_ == Geometry::HalfStrip; }

    // Disks present in the cell at translate (i,j), as (disk id, global disk).
    // f(int id, const Disk& global_disk, const LatticeVector& cell) -> void.
    template <typename F>
    void for_disks_in_translate(std::int64_t i, std::int64_t j, F&& f) const;
    // All disks of the 3x3 translate neighbourhood of geometric cell (i,j).
    template <typename F>
    void for_disks_near(std::int64_t i, std::int64_t j, F&& f) const;

    // Disk `id` of cell z in global coordinates. Throws std::domain_error when
    // that disk does not exist in the cell.
    Disk disk_in_cell(const LatticeVector& z, int id) const;
    int disk_count_in_cell(const LatticeVector& z) const;
    std::vector<int> disk_ids_in_cell(const LatticeVector& z) const;

    // Total scatterer perimeter of a cell / of the unmodified pattern.
    double cell_perimeter(const LatticeVector& z) const;
    double pattern_perimeter() const { return pattern_perimeter_; }

private:
    void validate();
    bool disk_crosses_wall(const Disk& global) const;

    std::vector<Disk> pattern_;
    Geometry geometry_;
    HorizonDecl horizon_;
    std::map<LatticeVector, LocalMod> mods_;
    double pattern_perimeter_ = 0;
    double min_gap_ = 0;
    double max_radius_ = 0;
};

// Flight field. Convention: H = |v|^2/2 + U(q), force = -grad U.
class FieldSpec {
public:
    enum class Kind { None, ConstantGravity, Coulomb, VanishingPotential, ThermostatConstant };

    static FieldSpec none();
    // force = g * direction (|direction| = 1); U = -g <q, direction>.
    static FieldSpec constant_gravity(double g, Vec2 direction, double energy_h);
    // U = e / |q - center|; center must lie strictly inside a scatterer.
    static FieldSpec coulomb(double e, Vec2 center, double energy_h);
    static FieldSpec vanishing_potential(std::function<double(Vec2)> u,
                                         std::function<Vec2(Vec2)> grad_u, double u_bound,
                                         double grad_bound, double energy_h);
    // Gaussian thermostat: q" = E - (<q', E>/|q'|^2) q'; speed is conserved.
    static FieldSpec thermostat_constant(Vec2 e_field);

    Kind kind() const { return kind_; }
    bool is_free() const { return kind_ == Kind::None; }
    bool conserves_speed() const {
        return kind_ == Kind::None || kind_ == Kind::ThermostatConstant;
    }
    bool is_potential() const {
        return kind_ == Kind::ConstantGravity || kind_ == Kind::Coulomb ||
               kind_ == Kind::VanishingPotential;
    }
    double energy() const { return energy_h_; }
    double potential(const Vec2& q) const;
    // Acceleration; velocity enters only for the thermostat term.
    Vec2 acceleration(const Vec2& q, const Vec2& v) const;
    // Speed at position q on the declared energy level (potential fields).
    double speed_at(const Vec2& q) const;
    const Vec2& gravity_vector() const { return grav_; }
    const Vec2& coulomb_center() const { return coulomb_center_; }

private:
    FieldSpec() = default;
    Kind kind_ = Kind::None;
    Vec2 grav_;                    // g * direction
    double coulomb_e_ = 0;
    Vec2 coulomb_center_;
    std::function<double(Vec2)> u_;
    std::function<Vec2(Vec2)> grad_u_;
    Vec2 thermo_e_;
    double energy_h_ = 0.5;  // H; free/thermostat flights run at speed 1
};

// Base point of the collision map: which scatterer of the cell was hit, the
// arclength along its boundary and the reflection angle.
struct BoundaryPoint {
    int disk_id = 0;
    double r = 0;    // in [0, 2 pi radius)
    double phi = 0;  // in [-pi/2, pi/2]
};

// BoundaryPoint plus the lattice cell: a point of M x Z^d.
struct BoundaryCoord {
    LatticeVector cell;
    BoundaryPoint pt;
};

struct CollisionEvent {
    double time = 0;       // flight time
    Vec2 q;                // impact point, global coordinates
    Vec2 v_pre, v_post;
    LatticeVector cell;    // cell owning the disk that was hit
    int disk_id = 0;
    double r = 0, phi = 0;
    LatticeVector tau;     // cell displacement (filled by collision_map)
    bool grazing = false;
    int wall_bounces = 0;
};

struct FlightLimits {
    double path_budget = 0;       // 0 = derive from horizon declaration
    std::int64_t step_budget = 20000000;
};

// Exact first disk intersection of the free flight from q with velocity v
// (|v| need not be 1; flat walls reflect in passing). Throws HorizonError when
// the path exceeds the budget (4 x declared bound by default).
CollisionEvent next_collision_free(const ScattererConfig& config, Vec2 q, Vec2 v,
                                   const FlightLimits& limits = {},
                                   std::optional<std::pair<LatticeVector, int>> exclude = {});

// Field flight: constant gravity propagates exact parabolic arcs; the other
// fields use an adaptive embedded RK4 with step doubling. Boundary crossings
// are refined to |signed distance| < 1e-12.
CollisionEvent next_collision_field(const ScattererConfig& config, Vec2 q, Vec2 v,
                                    const FieldSpec& field, const FlightLimits& limits = {});

// Boundary coordinates <-> launch data.
Vec2 boundary_position(const ScattererConfig& config, const BoundaryCoord& y);
Vec2 boundary_outgoing_velocity(const ScattererConfig& config, const FieldSpec& field,
                                const BoundaryCoord& y);
BoundaryCoord event_to_boundary(const CollisionEvent& ev);

// One step of the collision map on M x Z^d. tau is exact integer arithmetic.
CollisionEvent collision_map(const ScattererConfig& config, const FieldSpec& field,
                             const BoundaryCoord& state, const FlightLimits& limits = {});

// nu = c cos(phi) dr dphi on the given cell's scatterer boundary.
BoundaryCoord sample_nu(const ScattererConfig& config, const LatticeVector& cell, RngStream& rng);

struct HorizonReport {
    double max_free_path = 0;
    bool pass = false;
    double declared_bound = 0;
    std::int64_t rays = 0;
    std::string violation;  // description of the offending ray, when any
};

// Launches N nu-random rays and reports the maximal free path against the
// declared bound. A HorizonError surfaces as a failed report.
HorizonReport verify_finite_horizon(const ScattererConfig& config, std::int64_t N,
                                    std::uint64_t seed, int workers = 1);

// Continuous-time flow state.
struct FlowState {
    Vec2 q;  // global position
    Vec2 v;
};

// G^t: evolves the flow state by time t (t >= 0) through the event sequence.
FlowState billiard_flow(const ScattererConfig& config, const FieldSpec& field, FlowState x,
                        double t, const FlightLimits& limits = {});

// Cell of a flow-state position.
LatticeVector flow_cell(const ScattererConfig& config, const Vec2& q);

// ---------------------------------------------------------------------------

// Collision map as a lattice system for the estimator suite. Works for every
// geometry/field combination via full-space stepping; additionally exposes the
// product-structure interface (step from the base alone) for configurations
// that are translation invariant (Plane geometry, no mods, speed-conserving
// field).
class BilliardSystem {
public:
    using Base = BoundaryPoint;

    BilliardSystem(ScattererConfig config, FieldSpec field, FlightLimits limits = {});

    LatticeSplit split() const { return config_.split(); }
    ExtendedState<Base> step_x(const ExtendedState<Base>& x) const;
    Base sample_cell_base(RngStream& rng, const LatticeVector& z) const;
    double cell_measure(const LatticeVector& z) const;
    double base_metric(const Base& a, const Base& b) const;

    // Product-structure interface; throws std::domain_error unless the
    // configuration is translation invariant.
    Step<Base> step(const Base& y) const;
    Base sample_invariant(RngStream& rng) const;
    bool translation_invariant() const { return product_; }

    // Last-event detail of step_x (grazing flag) is returned via this variant.
    ExtendedState<Base> step_x(const ExtendedState<Base>& x, CollisionEvent& ev) const;
    ExtendedState<Base> step_x_flagged(const ExtendedState<Base>& x, bool& grazing) const {
        CollisionEvent ev;
        ExtendedState<Base> out = step_x(x, ev);
        grazing = ev.grazing;
        return out;
    }

    // Kinetic energy at a collision point (potential fields evaluate the
    // declared energy level at the impact position; otherwise 1/2).
    double kinetic_energy(const Base& y, const LatticeVector& cell) const;

    // Deterministic quadrature of psi(BoundaryPoint) against nu on the
    // unmodified pattern fiber (tensor Simpson rule).
    double nu_quadrature(const std::function<double(const Base&)>& f) const;

    const ScattererConfig& config() const { return config_; }
    const FieldSpec& field() const { return field_; }

private:
    ScattererConfig config_;
    FieldSpec field_;
    FlightLimits limits_;
    bool product_ = false;
};

// --- template bodies -------------------------------------------------------

template <typename F>
void ScattererConfig::for_disks_in_translate(std::int64_t i, std::int64_t j, F&& f) const {
    if (!translate_exists(i, j)) return;
    const LatticeVector cell = cell_of_translate(i, j);
    const Vec2 shift{static_cast<double>(i), static_cast<double>(j)};
    auto it = mods_.find(cell);
    const LocalMod* mod = it == mods_.end() ? nullptr : &it->second;
    for (int k = 0; k < static_cast<int>(pattern_.size()); ++k) {
        if (mod) {
            bool removed = false;
            for (int rm : mod->removed) removed = removed || rm == k;
            if (removed) continue;
        }
        Disk g{pattern_[static_cast<std::size_t>(k)].center + shift,
               pattern_[static_cast<std::size_t>(k)].radius};
        if (disk_crosses_wall(g)) continue;
        f(k, g, cell);
    }
    if (mod) {
        for (int a = 0; a < static_cast<int>(mod->added.size()); ++a) {
            Disk g{mod->added[static_cast<std::size_t>(a)].center + shift,
                   mod->added[static_cast<std::size_t>(a)].radius};
            f(static_cast<int>(pattern_.size()) + a, g, cell);
        }
    }
}

template <typename F>
void ScattererConfig::for_disks_near(std::int64_t i, std::int64_t j, F&& f) const {
    for (std::int64_t di = -1; di <= 1; ++di)
        for (std::int64_t dj = -1; dj <= 1; ++dj) for_disks_in_translate(i + di, j + dj, f);
}

}  // namespace latmix

#endif
