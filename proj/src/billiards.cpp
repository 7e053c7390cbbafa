#include "latmix/billiards.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "latmix/errors.hpp"
#include "latmix/parallel.hpp"
#include "latmix/stats.hpp"

namespace latmix {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kGrazingTol = 1e-8;
}  // namespace

// ---------------------------------------------------------------- config ---

ScattererConfig::ScattererConfig(std::vector<Disk> pattern, Geometry geometry, HorizonDecl horizon,
                                 std::map<LatticeVector, LocalMod> mods)
    : pattern_(std::move(pattern)), geometry_(geometry), horizon_(horizon), mods_(std::move(mods)) {
    validate();
}

ScattererConfig ScattererConfig::reference(Geometry g) {
    return ScattererConfig({{{0.0, 0.0}, 0.4}, {{0.5, 0.5}, 0.3}}, g, {true, 4.0});
}

ScattererConfig ScattererConfig::galton_reference() {
    // Central disk everywhere; the corner disk is omitted automatically in the
    // wall column (it would cross x = 0), which leaves every corridor of the
    // bulk blocked.
    return ScattererConfig({{{0.5, 0.5}, 0.4}, {{0.0, 0.0}, 0.3}}, Geometry::HalfPlane,
                           {true, 6.0});
}

ScattererConfig ScattererConfig::half_strip_single() {
    // Flat walls leave thin near-wall corridors open, so the horizon is
    // declared unbounded; the bound below only caps the event detector.
    return ScattererConfig({{{0.5, 0.5}, 0.4}}, Geometry::HalfStrip, {false, 10000.0});
}

ScattererConfig ScattererConfig::single_disk(double radius) {
    return ScattererConfig({{{0.0, 0.0}, radius}}, Geometry::Plane, {true, 10.0});
}

LatticeSplit ScattererConfig::split() const {
    switch (geometry_) {
        case Geometry::Plane: return {0, 2};
        case Geometry::Tube: return {0, 1};
        case Geometry::HalfStrip: return {1, 0};
        case Geometry::HalfPlane: return {1, 1};
    }
    return {0, 2};
}

LatticeVector ScattererConfig::cell_of_translate(std::int64_t i, std::int64_t j) const {
    switch (geometry_) {
        case Geometry::Plane: return LatticeVector{i, j};
        case Geometry::Tube:
        case Geometry::HalfStrip: return LatticeVector{i};
        case Geometry::HalfPlane: return LatticeVector{i, j};
    }
    return LatticeVector{i, j};
}

bool ScattererConfig::translate_exists(std::int64_t i, std::int64_t j) const {
    switch (geometry_) {
        case Geometry::Plane: return true;
        case Geometry::Tube: return j == 0;
        case Geometry::HalfStrip: return j == 0 && i >= 0;
        case Geometry::HalfPlane: return i >= 0;
    }
    return false;
}

void ScattererConfig::translate_of_cell(const LatticeVector& z, std::int64_t& i,
                                        std::int64_t& j) const {
    switch (geometry_) {
        case Geometry::Plane:
        case Geometry::HalfPlane:
            i = z[0];
            j = z[1];
            return;
        case Geometry::Tube:
        case Geometry::HalfStrip:
            i = z[0];
            j = 0;
            return;
    }
}

bool ScattererConfig::cell_in_lattice(const LatticeVector& z) const {
    if (z.dim() != split().dim()) return false;
    std::int64_t i = 0, j = 0;
    translate_of_cell(z, i, j);
    return translate_exists(i, j);
}

bool ScattererConfig::disk_crosses_wall(const Disk& g) const {
    const double eps = 1e-9;
    if (has_wall_x0() && g.center.x - g.radius < eps) return true;
    if (has_walls_y() && (g.center.y - g.radius < eps || g.center.y + g.radius > 1.0 - eps))
        return true;
    return false;
}

namespace {

void check_disjoint(const Disk& a, const Disk& b, const char* what) {
    double gap = (a.center - b.center).norm() - a.radius - b.radius;
    if (gap <= 0)
        throw std::invalid_argument(std::string("ScattererConfig: ") + what +
                                    " overlap (gap = " + std::to_string(gap) + ")");
}

}  // namespace

void ScattererConfig::validate() {
    for (const Disk& d : pattern_) {
        if (d.radius <= 0 || d.radius >= 0.95)
            throw std::invalid_argument("ScattererConfig: disk radius must be in (0, 0.95)");
        if (d.center.x < 0 || d.center.x >= 1 || d.center.y < 0 || d.center.y >= 1)
            throw std::invalid_argument("ScattererConfig: disk center must lie in [0,1)^2");
    }
    for (const auto& [cell, mod] : mods_) {
        if (!cell_in_lattice(cell))
            throw std::invalid_argument("ScattererConfig: local mod on cell outside lattice " +
                                        cell.str());
        for (int k : mod.removed)
            if (k < 0 || k >= static_cast<int>(pattern_.size()))
                throw std::invalid_argument("ScattererConfig: removed disk index out of range");
        for (const Disk& d : mod.added)
            if (d.radius <= 0 || d.radius >= 0.95)
                throw std::invalid_argument("ScattererConfig: added disk radius out of range");
    }
    pattern_perimeter_ = 0;
    max_radius_ = 0;
    for (const Disk& d : pattern_) {
        pattern_perimeter_ += 2 * kPi * d.radius;
        max_radius_ = std::max(max_radius_, d.radius);
    }
    for (const auto& [cell, mod] : mods_)
        for (const Disk& d : mod.added) max_radius_ = std::max(max_radius_, d.radius);

    // Pairwise disjointness with positive gaps: pattern against its 5x5
    // translates, and every modified cell against its neighbourhood.
    min_gap_ = 1.0;
    auto gap_check = [&](const Disk& a, const Disk& b) {
        check_disjoint(a, b, "disks");
        min_gap_ = std::min(min_gap_, (a.center - b.center).norm() - a.radius - b.radius);
    };
    for (std::size_t a = 0; a < pattern_.size(); ++a) {
        for (std::int64_t i = -2; i <= 2; ++i) {
            for (std::int64_t j = -2; j <= 2; ++j) {
                for (std::size_t b = 0; b < pattern_.size(); ++b) {
                    if (i == 0 && j == 0 && b <= a) continue;
                    Disk tb{pattern_[b].center + Vec2{static_cast<double>(i), static_cast<double>(j)},
                            pattern_[b].radius};
                    gap_check(pattern_[a], tb);
                }
            }
        }
    }
    for (const auto& [cell, mod] : mods_) {
        std::int64_t ci = 0, cj = 0;
        translate_of_cell(cell, ci, cj);
        for (std::size_t a = 0; a < mod.added.size(); ++a) {
            Disk ga{mod.added[a].center + Vec2{static_cast<double>(ci), static_cast<double>(cj)},
                    mod.added[a].radius};
            for_disks_near(ci, cj, [&](int id, const Disk& g, const LatticeVector& owner) {
                if (owner == cell && id == static_cast<int>(pattern_.size() + a)) return;
                gap_check(ga, g);
            });
            if (disk_crosses_wall(ga))
                throw std::invalid_argument("ScattererConfig: added disk crosses a domain wall");
        }
    }
}

Disk ScattererConfig::disk_in_cell(const LatticeVector& z, int id) const {
    if (!cell_in_lattice(z))
        throw std::domain_error("ScattererConfig: cell outside lattice: " + z.str());
    std::int64_t i = 0, j = 0;
    translate_of_cell(z, i, j);
    Disk out;
    bool found = false;
    for_disks_in_translate(i, j, [&](int k, const Disk& g, const LatticeVector&) {
        if (k == id) {
            out = g;
            found = true;
        }
    });
    if (!found)
        throw std::domain_error("ScattererConfig: disk " + std::to_string(id) +
                                " absent in cell " + z.str());
    return out;
}

int ScattererConfig::disk_count_in_cell(const LatticeVector& z) const {
    return static_cast<int>(disk_ids_in_cell(z).size());
}

std::vector<int> ScattererConfig::disk_ids_in_cell(const LatticeVector& z) const {
    std::int64_t i = 0, j = 0;
    translate_of_cell(z, i, j);
    std::vector<int> ids;
    for_disks_in_translate(i, j, [&](int k, const Disk&, const LatticeVector&) { ids.push_back(k); });
    return ids;
}

double ScattererConfig::cell_perimeter(const LatticeVector& z) const {
    std::int64_t i = 0, j = 0;
    translate_of_cell(z, i, j);
    double p = 0;
    for_disks_in_translate(i, j,
                           [&](int, const Disk& g, const LatticeVector&) { p += 2 * kPi * g.radius; });
    return p;
}

// ----------------------------------------------------------------- field ---

FieldSpec FieldSpec::none() { return FieldSpec(); }

FieldSpec FieldSpec::constant_gravity(double g, Vec2 direction, double energy_h) {
    if (g < 0) throw std::invalid_argument("FieldSpec: g < 0");
    double n = direction.norm();
    if (n == 0) throw std::invalid_argument("FieldSpec: zero direction");
    FieldSpec f;
    f.kind_ = Kind::ConstantGravity;
    f.grav_ = direction * (g / n);
    f.energy_h_ = energy_h;
    return f;
}

FieldSpec FieldSpec::coulomb(double e, Vec2 center, double energy_h) {
    FieldSpec f;
    f.kind_ = Kind::Coulomb;
    f.coulomb_e_ = e;
    f.coulomb_center_ = center;
    f.energy_h_ = energy_h;
    return f;
}

FieldSpec FieldSpec::vanishing_potential(std::function<double(Vec2)> u,
                                         std::function<Vec2(Vec2)> grad_u, double u_bound,
                                         double grad_bound, double energy_h) {
    FieldSpec f;
    f.kind_ = Kind::VanishingPotential;
    f.u_ = std::move(u);
    f.grad_u_ = std::move(grad_u);
    f.energy_h_ = energy_h;
    // Spot-check declared bounds on a coarse grid.
    for (int i = -4; i <= 4; ++i) {
        for (int j = -4; j <= 4; ++j) {
            Vec2 q{static_cast<double>(i), static_cast<double>(j)};
            if (std::fabs(f.u_(q)) > u_bound * (1 + 1e-9))
                throw std::invalid_argument("FieldSpec: |U| exceeds declared bound");
            if (f.grad_u_(q).norm() > grad_bound * (1 + 1e-9))
                throw std::invalid_argument("FieldSpec: |grad U| exceeds declared bound");
        }
    }
    return f;
}

FieldSpec FieldSpec::thermostat_constant(Vec2 e_field) {
    FieldSpec f;
    f.kind_ = Kind::ThermostatConstant;
    f.thermo_e_ = e_field;
    return f;
}

double FieldSpec::potential(const Vec2& q) const {
    switch (kind_) {
        case Kind::None:
        case Kind::ThermostatConstant: return 0;
        case Kind::ConstantGravity: return -dot(q, grav_);
        case Kind::Coulomb: {
            double d = (q - coulomb_center_).norm();
            return coulomb_e_ / d;
        }
        case Kind::VanishingPotential: return u_(q);
    }
    return 0;
}

Vec2 FieldSpec::acceleration(const Vec2& q, const Vec2& v) const {
    switch (kind_) {
        case Kind::None: return {0, 0};
        case Kind::ConstantGravity: return grav_;
        case Kind::Coulomb: {
            Vec2 d = q - coulomb_center_;
            double r = d.norm();
            return d * (coulomb_e_ / (r * r * r));
        }
        case Kind::VanishingPotential: {
            Vec2 g = grad_u_(q);
            return {-g.x, -g.y};
        }
        case Kind::ThermostatConstant: {
            double v2 = v.norm2();
            return thermo_e_ - v * (dot(v, thermo_e_) / v2);
        }
    }
    return {0, 0};
}

double FieldSpec::speed_at(const Vec2& q) const {
    if (!is_potential()) return 1.0;
    double k = energy_h_ - potential(q);
    if (k <= 0)
        throw std::domain_error("FieldSpec: kinetic energy nonpositive at (" +
                                std::to_string(q.x) + "," + std::to_string(q.y) + ")");
    return std::sqrt(2.0 * k);
}

// ------------------------------------------------------------- boundary ----

Vec2 boundary_position(const ScattererConfig& config, const BoundaryCoord& y) {
    Disk d = config.disk_in_cell(y.cell, y.pt.disk_id);
    double theta = y.pt.r / d.radius;
    return d.center + Vec2{d.radius * std::cos(theta), d.radius * std::sin(theta)};
}

Vec2 boundary_outgoing_velocity(const ScattererConfig& config, const FieldSpec& field,
                                const BoundaryCoord& y) {
    Disk d = config.disk_in_cell(y.cell, y.pt.disk_id);
    double theta = y.pt.r / d.radius;
    Vec2 n{std::cos(theta), std::sin(theta)};
    Vec2 t{-n.y, n.x};
    Vec2 dir = n * std::cos(y.pt.phi) + t * std::sin(y.pt.phi);
    double speed = 1.0;
    if (field.is_potential()) {
        Vec2 q = d.center + n * d.radius;
        speed = field.speed_at(q);
    }
    return dir * speed;
}

BoundaryCoord event_to_boundary(const CollisionEvent& ev) {
    return BoundaryCoord{ev.cell, BoundaryPoint{ev.disk_id, ev.r, ev.phi}};
}

CollisionEvent collision_map(const ScattererConfig& config, const FieldSpec& field,
                             const BoundaryCoord& state, const FlightLimits& limits) {
    Vec2 q = boundary_position(config, state);
    Vec2 v = boundary_outgoing_velocity(config, field, state);
    CollisionEvent ev =
        field.is_free()
            ? next_collision_free(config, q, v, limits,
                                  std::make_pair(state.cell, state.pt.disk_id))
            : next_collision_field(config, q, v, field, limits);
    ev.tau = ev.cell - state.cell;
    return ev;
}

BoundaryCoord sample_nu(const ScattererConfig& config, const LatticeVector& cell, RngStream& rng) {
    std::vector<int> ids = config.disk_ids_in_cell(cell);
    if (ids.empty()) throw std::domain_error("sample_nu: cell has no scatterers: " + cell.str());
    std::vector<double> perims;
    double total = 0;
    for (int id : ids) {
        double p = 2 * kPi * config.disk_in_cell(cell, id).radius;
        total += p;
        perims.push_back(total);
    }
    double u = rng.uniform01() * total;
    std::size_t k = 0;
    while (k + 1 < perims.size() && u >= perims[k]) ++k;
    Disk d = config.disk_in_cell(cell, ids[k]);
    BoundaryCoord y;
    y.cell = cell;
    y.pt.disk_id = ids[k];
    y.pt.r = rng.uniform01() * 2 * kPi * d.radius;
    y.pt.phi = std::asin(2.0 * rng.uniform01() - 1.0);
    return y;
}

HorizonReport verify_finite_horizon(const ScattererConfig& config, std::int64_t N,
                                    std::uint64_t seed, int workers) {
    if (N < 1) throw std::invalid_argument("verify_finite_horizon: N < 1");
    HorizonReport rep;
    rep.declared_bound = config.horizon().bound;
    rep.rays = N;
    if (config.pattern_perimeter() == 0) {
        rep.pass = false;
        rep.violation = "no scatterers";
        return rep;
    }
    const LatticeVector z0 = config.geometry() == Geometry::HalfPlane
                                 ? LatticeVector{1, 0}
                                 : (config.split().d1 > 0 ? LatticeVector{1}
                                                          : LatticeVector::zero(config.split().dim()));
    auto ranges = batch_ranges(N);
    std::vector<double> maxima(ranges.size(), 0.0);
    std::vector<std::string> violations(ranges.size());
    run_batches(static_cast<int>(ranges.size()), workers, [&](int b) {
        double mx = 0;
        for (std::int64_t i = ranges[static_cast<std::size_t>(b)].begin;
             i < ranges[static_cast<std::size_t>(b)].end; ++i) {
            RngStream rng = RngStream::fork(seed, static_cast<std::uint64_t>(i));
            BoundaryCoord y = sample_nu(config, z0, rng);
            Vec2 q = boundary_position(config, y);
            Vec2 v = boundary_outgoing_velocity(config, FieldSpec::none(), y);
            try {
                CollisionEvent ev = next_collision_free(config, q, v, {},
                                                        std::make_pair(y.cell, y.pt.disk_id));
                mx = std::max(mx, ev.time);
            } catch (const HorizonError&) {
                if (violations[static_cast<std::size_t>(b)].empty())
                    violations[static_cast<std::size_t>(b)] =
                        "ray from (" + std::to_string(q.x) + "," + std::to_string(q.y) +
                        ") dir (" + std::to_string(v.x) + "," + std::to_string(v.y) +
                        ") exceeded " + std::to_string(4 * config.horizon().bound);
                mx = std::max(mx, 4 * config.horizon().bound);
            }
        }
        maxima[static_cast<std::size_t>(b)] = mx;
    });
    for (std::size_t b = 0; b < maxima.size(); ++b) {
        rep.max_free_path = std::max(rep.max_free_path, maxima[b]);
        if (rep.violation.empty() && !violations[b].empty()) rep.violation = violations[b];
    }
    rep.pass = config.horizon().finite && rep.violation.empty() &&
               rep.max_free_path <= config.horizon().bound;
    return rep;
}

LatticeVector flow_cell(const ScattererConfig& config, const Vec2& q) {
    std::int64_t i = static_cast<std::int64_t>(std::floor(q.x));
    std::int64_t j = static_cast<std::int64_t>(std::floor(q.y));
    switch (config.geometry()) {
        case Geometry::Tube:
        case Geometry::HalfStrip: return LatticeVector{i};
        default: return LatticeVector{i, j};
    }
}

// ----------------------------------------------------------------- system --

BilliardSystem::BilliardSystem(ScattererConfig config, FieldSpec field, FlightLimits limits)
    : config_(std::move(config)), field_(std::move(field)), limits_(limits) {
    product_ = (config_.geometry() == Geometry::Plane || config_.geometry() == Geometry::Tube) &&
               config_.mods().empty() && field_.conserves_speed();
    if (field_.kind() == FieldSpec::Kind::Coulomb) {
        // The potential center must lie strictly inside a scatterer.
        Vec2 center = field_.coulomb_center();
        bool inside = false;
        std::int64_t gi = static_cast<std::int64_t>(std::floor(center.x));
        std::int64_t gj = static_cast<std::int64_t>(std::floor(center.y));
        config_.for_disks_near(gi, gj, [&](int, const Disk& g, const LatticeVector&) {
            if ((g.center - center).norm() < g.radius) inside = true;
        });
        if (!inside)
            throw std::invalid_argument(
                "BilliardSystem: Coulomb center must lie strictly inside a scatterer");
    }
}

ExtendedState<BilliardSystem::Base> BilliardSystem::step_x(const ExtendedState<Base>& x) const {
    CollisionEvent ev;
    return step_x(x, ev);
}

ExtendedState<BilliardSystem::Base> BilliardSystem::step_x(const ExtendedState<Base>& x,
                                                           CollisionEvent& ev) const {
    ev = collision_map(config_, field_, BoundaryCoord{x.cell, x.base}, limits_);
    return {BoundaryPoint{ev.disk_id, ev.r, ev.phi}, ev.cell};
}

Step<BilliardSystem::Base> BilliardSystem::step(const Base& y) const {
    if (!product_)
        throw std::domain_error(
            "BilliardSystem::step: configuration is not translation invariant; use step_x");
    LatticeVector z0 = LatticeVector::zero(config_.split().dim());
    CollisionEvent ev = collision_map(config_, field_, BoundaryCoord{z0, y}, limits_);
    return {BoundaryPoint{ev.disk_id, ev.r, ev.phi}, ev.tau};
}

BilliardSystem::Base BilliardSystem::sample_invariant(RngStream& rng) const {
    return sample_nu(config_, LatticeVector::zero(config_.split().dim()), rng).pt;
}

BilliardSystem::Base BilliardSystem::sample_cell_base(RngStream& rng,
                                                      const LatticeVector& z) const {
    return sample_nu(config_, z, rng).pt;
}

double BilliardSystem::cell_measure(const LatticeVector& z) const {
    if (!config_.cell_in_lattice(z)) return 0.0;
    return config_.cell_perimeter(z) / config_.pattern_perimeter();
}

double BilliardSystem::base_metric(const Base& a, const Base& b) const {
    if (a.disk_id != b.disk_id) return 10.0;
    double perim = 0;
    for (const Disk& d : config_.pattern())
        perim = std::max(perim, 2 * kPi * d.radius);
    double dr = std::fabs(a.r - b.r);
    dr = std::min(dr, perim - dr);
    return dr + std::fabs(a.phi - b.phi);
}

double BilliardSystem::kinetic_energy(const Base& y, const LatticeVector& cell) const {
    if (!field_.is_potential()) return 0.5;
    Vec2 q = boundary_position(config_, BoundaryCoord{cell, y});
    double s = field_.speed_at(q);
    return 0.5 * s * s;
}

double BilliardSystem::nu_quadrature(const std::function<double(const Base&)>& f) const {
    // Tensor Simpson over (r, phi) per pattern disk against cos(phi)/2 dphi
    // x dr / perimeter.
    const int nr = 256, nphi = 128;
    double total = 0;
    for (int id = 0; id < static_cast<int>(config_.pattern().size()); ++id) {
        const Disk& d = config_.pattern()[static_cast<std::size_t>(id)];
        const double perim = 2 * kPi * d.radius;
        const double hr = perim / nr, hp = kPi / nphi;
        double acc = 0;
        for (int ir = 0; ir <= nr; ++ir) {
            double wr = (ir == 0 || ir == nr) ? 1 : (ir % 2 ? 4 : 2);
            double r = hr * ir;
            double inner = 0;
            for (int ip = 0; ip <= nphi; ++ip) {
                double wp = (ip == 0 || ip == nphi) ? 1 : (ip % 2 ? 4 : 2);
                double phi = -kPi / 2 + hp * ip;
                inner += wp * f(Base{id, r == perim ? 0.0 : r, phi}) * std::cos(phi);
            }
            acc += wr * inner;
        }
        total += acc * (hr / 3) * (hp / 3) / 2.0;
    }
    return total / config_.pattern_perimeter();
}

}  // namespace latmix
