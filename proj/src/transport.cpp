#include "qpsim/transport.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "qpsim/errors.hpp"
#include "qpsim/units.hpp"

namespace qpsim {

void TransportConfig::validate() const {
    std::vector<std::string> p;
    if (!(bin_width > 0)) p.push_back("transport.bin_width_ns must be positive");
    if (!(max_time >= bin_width)) p.push_back("transport.max_time_ns must be at least one bin");
    if (chunk_size == 0) p.push_back("transport.chunk_size must be positive");
    if (!p.empty()) throw ValidationError(p);
}

std::size_t TransportConfig::n_bins() const {
    return static_cast<std::size_t>(std::ceil(max_time / bin_width - 1e-9));
}

DeviceMaterials DeviceMaterials::build(const MaterialDatabase& db, const ChipGeometry& g, double top_nm,
                                       double bottom_nm, double electrode_nm) {
    DeviceMaterials m;
    m.substrate = db.substrate();
    m.groundplane.params = db.superconductor(g.groundplane_material);
    m.groundplane.thickness = g.groundplane_thickness * 1e-3;
    m.junction.params = db.superconductor("Al");
    m.junction.params.gap = bilayer_average_gap(top_nm, bottom_nm, m.junction.params.gap_bulk,
                                                m.junction.params.gap_thickness_coeff);
    m.junction.thickness = electrode_nm * 1e-3;
    if (g.islands_enabled) {
        if (db.has_superconductor(g.island_material)) {
            m.island_sc = SuperconductingFilm{db.superconductor(g.island_material), g.island_thickness};
        } else if (db.has_normal_metal(g.island_material)) {
            m.island_nm = NormalMetalFilm{db.normal_metal(g.island_material), g.island_thickness, 0.0};
        } else {
            throw ValidationError({"geometry.island_material: unknown material '" + g.island_material + "'"});
        }
    }
    if (m.island_nm) m.island_nm->threshold = m.threshold();
    return m;
}

InjectionSource make_injection_source(const ChipGeometry& g, const DeviceMaterials& m, std::uint64_t count,
                                      std::optional<double> energy_override) {
    InjectionSource s;
    s.x = g.injector_x;
    s.y = g.injector_y;
    s.phonon_energy = energy_override.value_or(2.0 * m.junction_gap());
    s.count = count;
    return s;
}

std::uint64_t GammaImpact::n_eh(double pair_energy_eV) const {
    if (!(pair_energy_eV > 0)) throw InvalidInput("pair energy must be positive");
    return static_cast<std::uint64_t>(std::floor(deposit_energy * 1e3 / pair_energy_eV + 1e-9));
}

PhononTracker::PhononTracker(const Chip& chip, const DeviceMaterials& mats, const TransportConfig& cfg)
    : chip_(chip), mats_(mats), cfg_(cfg), model_(mats.substrate, cfg.anisotropic, cfg.decay_kernel),
      threshold_(mats.threshold()) {
    cfg_.validate();
    const auto& g = chip.geometry();
    if (g.islands_enabled && !mats.island_sc && !mats.island_nm)
        throw ValidationError({"islands enabled but no island film material supplied"});
}

DepositLedger PhononTracker::make_ledger() const {
    return DepositLedger(chip_.electrode_count(), cfg_.n_bins(), cfg_.bin_width, chip_.hash());
}

PhononState PhononTracker::make_phonon(const Vec3& pos, const Vec3& k, Branch b, double e, double t) const {
    PhononState p;
    p.position = pos;
    p.k_direction = k;
    p.branch = b;
    p.energy = e;
    p.time = t;
    p.velocity = model_.group_velocity(k, b);
    return p;
}

void PhononTracker::emit(const PhononState& p, std::vector<PhononState>& queue, DepositLedger& ledger) const {
    if (cfg_.kill_subthreshold && p.energy < threshold_) {
        ledger.energy.dropped += EnergyAudit::quantize(p.energy);
        return;
    }
    queue.push_back(p);
}

Vec3 PhononTracker::sample_direction_into(Rng& rng, const Vec3& n, Branch b, bool cosine, Vec3& v) const {
    for (int attempt = 0; attempt < 64; ++attempt) {
        const Vec3 k = cosine ? sample_cosine_hemisphere(rng, n) : sample_uniform_hemisphere(rng, n);
        v = model_.group_velocity(k, b);
        if (v.dot(n) > 1e-9 * v.norm()) return k;
    }
    v = model_.group_velocity(n, b);
    return n;
}

void PhononTracker::diffuse_reflect(PhononState& p, Rng& rng, const Vec3& n) const {
    p.k_direction = sample_direction_into(rng, n, p.branch, true, p.velocity);
}

void PhononTracker::book_film(const CascadeOutcome& out, RegionKind kind, int electrode, const PhononState& p,
                              std::vector<PhononState>& queue, DepositLedger& ledger, Rng& rng,
                              const Vec3& n) const {
    const auto q = EnergyAudit::quantize(out.deposited);
    switch (kind) {
        case RegionKind::ElectrodePatch:
            ledger.energy.electrodes += q;
            if (out.qp_count > 0) ledger.record(electrode, p.time, out.qp_count);
            break;
        case RegionKind::GroundPlane: ledger.energy.groundplane += q; break;
        default: ledger.energy.islands += q; break;
    }
    for (double e : out.returned_phonons) {
        if (cfg_.kill_subthreshold && e < threshold_) {
            ledger.energy.dropped += EnergyAudit::quantize(e);
            continue;
        }
        PhononState d;
        d.position = p.position;
        d.branch = model_.sample_branch(rng);
        d.k_direction = sample_direction_into(rng, n, d.branch, true, d.velocity);
        d.energy = e;
        d.time = p.time;
        queue.push_back(d);
    }
}

void PhononTracker::step(PhononState& p, Rng& rng, DepositLedger& ledger, std::vector<PhononState>& queue,
                         CascadeOutcome& scratch) const {
    if (!p.alive) return;
    double iso = 0, anh = 0;
    if (cfg_.bulk_scattering) {
        iso = model_.isotope_rate(p.energy);
        anh = model_.anharmonic_rate(p.energy, p.branch);
    }
    const double total = iso + anh;
    const SurfaceHit hit = chip_.ray_to_boundary(p.position, p.velocity);
    const double t_sc = total > 0 ? sample_exponential(rng, total) : std::numeric_limits<double>::infinity();
    const double dt = std::min(t_sc, hit.flight_time);
    if (p.time + dt > cfg_.max_time) {
        ledger.energy.in_flight += EnergyAudit::quantize(p.energy);
        p.alive = false;
        return;
    }

    if (t_sc < hit.flight_time) {
        p.position += p.velocity * t_sc;
        p.time += t_sc;
        if (uniform01(rng) * total < iso) {
            auto [k, b] = model_.sample_isotope_scatter(rng);
            p.k_direction = k;
            p.branch = b;
            p.velocity = model_.group_velocity(k, b);
            return;
        }
        const DecayProducts d = model_.sample_anharmonic_decay(rng, p.energy, p.k_direction);
        emit(make_phonon(p.position, d.second.k_hat, d.second.branch, d.second.energy, p.time), queue, ledger);
        p.energy = d.first.energy;
        p.branch = d.first.branch;
        p.k_direction = d.first.k_hat;
        if (cfg_.kill_subthreshold && p.energy < threshold_) {
            ledger.energy.dropped += EnergyAudit::quantize(p.energy);
            p.alive = false;
            return;
        }
        p.velocity = model_.group_velocity(p.k_direction, p.branch);
        return;
    }

    p.position = hit.point;
    p.time += hit.flight_time;
    const Vec3 n = Chip::inward_normal(hit.face);
    const auto& g = chip_.geometry();

    auto superconductor = [&](const SuperconductingFilm& film) {
        if (uniform01(rng) >= film.params.p_abs || p.energy < 2.0 * film.gap() ||
            uniform01(rng) < escape_probability(2.0 * film.thickness, film.mean_free_path(p.energy))) {
            diffuse_reflect(p, rng, n);
            return;
        }
        sc_cascade(p.energy, film, rng, scratch);
        book_film(scratch, hit.region.kind, hit.region.electrode, p, queue, ledger, rng, n);
        p.alive = false;
    };

    switch (hit.region.kind) {
        case RegionKind::Wall:
            if (uniform01(rng) < g.wall_escape_probability) {
                ledger.energy.wall_escape += EnergyAudit::quantize(p.energy);
                ledger.escape_count += 1;
                p.alive = false;
            } else {
                diffuse_reflect(p, rng, n);
            }
            break;
        case RegionKind::BareSi: diffuse_reflect(p, rng, n); break;
        case RegionKind::GroundPlane: superconductor(mats_.groundplane); break;
        case RegionKind::ElectrodePatch: superconductor(mats_.junction); break;
        case RegionKind::Island:
            if (mats_.island_sc) {
                superconductor(*mats_.island_sc);
            } else {
                const NormalMetalFilm& film = *mats_.island_nm;
                if (uniform01(rng) >= film.params.p_abs ||
                    uniform01(rng) < escape_probability(2.0 * film.thickness, film.mean_free_path(p.energy))) {
                    diffuse_reflect(p, rng, n);
                    break;
                }
                nm_cascade(p.energy, film, rng, scratch);
                book_film(scratch, RegionKind::Island, -1, p, queue, ledger, rng, n);
                p.alive = false;
            }
            break;
    }
}

void PhononTracker::run(PhononState p, Rng& rng, DepositLedger& ledger, std::vector<PhononState>& queue,
                        CascadeOutcome& scratch) const {
    if (p.alive) queue.push_back(p);
    while (!queue.empty()) {
        PhononState cur = queue.back();
        queue.pop_back();
        while (cur.alive) step(cur, rng, ledger, queue, scratch);
    }
}

namespace {

struct WorkerScratch {
    std::vector<PhononState> queue;
    CascadeOutcome cascade;
};

template <class Fn>
DepositLedger parallel_particles(const PhononTracker& tr, std::uint64_t seed, std::uint64_t first,
                                 std::uint64_t count, Fn&& per_particle) {
    const auto& cfg = tr.config();
    unsigned nw = cfg.workers ? cfg.workers : std::max(1u, std::thread::hardware_concurrency());
    const std::uint64_t chunk = cfg.chunk_size;
    nw = static_cast<unsigned>(std::min<std::uint64_t>(nw, (count + chunk - 1) / chunk + 1));
    std::vector<DepositLedger> ledgers(nw, tr.make_ledger());
    std::atomic<std::uint64_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;

    auto work = [&](unsigned w) {
        try {
            WorkerScratch scratch;
            for (;;) {
                const std::uint64_t c = next.fetch_add(chunk);
                if (c >= count) break;
                const std::uint64_t end = std::min(count, c + chunk);
                for (std::uint64_t i = c; i < end; ++i) {
                    Rng rng = make_stream(seed, first + i);
                    per_particle(rng, ledgers[w], scratch);
                }
            }
        } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
            next.store(count);
        }
    };

    if (nw <= 1) {
        work(0);
    } else {
        std::vector<std::thread> threads;
        for (unsigned w = 0; w < nw; ++w) threads.emplace_back(work, w);
        for (auto& t : threads) t.join();
    }
    if (error) std::rethrow_exception(error);
    DepositLedger out = tr.make_ledger();
    for (const auto& l : ledgers) out.merge_in(l);
    return out;
}

}  // namespace

DepositLedger run_injection_shard(const InjectionSource& src, const Chip& chip, const DeviceMaterials& mats,
                                  const TransportConfig& cfg, std::uint64_t seed, std::uint64_t first,
                                  std::uint64_t count) {
    if (!(src.phonon_energy > 0)) throw ValidationError({"injection: phonon energy must be positive"});
    if (!chip.contains({src.x, src.y, chip.geometry().thickness}))
        throw ValidationError({"injection: injector lies outside the chip"});
    const PhononTracker tr(chip, mats, cfg);
    const Vec3 origin{src.x, src.y, chip.geometry().thickness};
    const Vec3 down{0, 0, -1};
    auto ledger = parallel_particles(tr, seed, first, count, [&](Rng& rng, DepositLedger& l, WorkerScratch& s) {
        l.energy.source += EnergyAudit::quantize(src.phonon_energy);
        PhononState p;
        p.position = origin;
        p.branch = tr.model().sample_branch(rng);
        p.energy = src.phonon_energy;
        p.time = 0;
        Vec3 v;
        for (int attempt = 0;; ++attempt) {
            p.k_direction = sample_uniform_hemisphere(rng, down);
            v = tr.model().group_velocity(p.k_direction, p.branch);
            if (v.z < 0 || attempt > 64) break;
        }
        p.velocity = v.z < 0 ? v : tr.model().group_velocity(down, p.branch);
        if (v.z >= 0) p.k_direction = down;
        s.queue.clear();
        tr.emit(p, s.queue, l);
        PhononState none;
        none.alive = false;
        tr.run(none, rng, l, s.queue, s.cascade);
    });
    ledger.source_kind = SourceKind::Injection;
    ledger.source_size = count;
    return ledger;
}

DepositLedger run_injection(const InjectionSource& src, const Chip& chip, const DeviceMaterials& mats,
                            const TransportConfig& cfg, std::uint64_t seed) {
    return run_injection_shard(src, chip, mats, cfg, seed, 0, src.count);
}

void emit_pair_phonons(const PhononTracker& tr, const GammaImpact& impact, Rng& rng, DepositLedger& ledger,
                       std::vector<PhononState>& queue, std::vector<ChargeTrack>* tracks) {
    const auto& s = tr.model().substrate();
    const Chip& chip = tr.chip();
    const double pair = s.pair_energy * 1e3;
    const double gap = s.bandgap * 1e3;
    const double kinetic = pair - gap;
    const double recombination = 0.5 * gap;
    const double debye = units::Hz_to_meV(s.debye_frequency * 1e12);
    ledger.energy.source += EnergyAudit::quantize(pair);

    auto spawn = [&](const Vec3& at, double e) {
        const Vec3 k = sample_isotropic(rng);
        const Branch b = tr.model().sample_branch(rng);
        tr.emit(tr.make_phonon(at, k, b, e, 0.0), queue, ledger);
    };
    // Debye quanta plus one remainder quantum; position chosen per quantum.
    auto emit_energy = [&](double e, auto&& where) {
        const double n = std::floor(e / debye);
        const double rem = e - n * debye;
        for (long i = 0; i < static_cast<long>(n); ++i) spawn(where(), debye);
        if (rem > 0) spawn(where(), rem);
    };

    const double u = uniform01(rng);
    const double ke[2] = {u * kinetic, kinetic - u * kinetic};
    for (double k_e : ke) {
        const Vec3 dir = sample_isotropic(rng);
        const double length = sample_exponential(rng, 1.0 / s.charge_trap_length);
        const SurfaceHit hit = chip.ray_to_boundary(impact.position, dir);
        const bool trapped = length < hit.flight_time;
        const double track = trapped ? length : hit.flight_time;
        const Vec3 stop = trapped ? impact.position + dir * length : hit.point;
        emit_energy(k_e, [&]() {
            const double at = uniform01(rng) * length;
            return at >= track ? stop : impact.position + dir * at;
        });
        if (trapped)
            emit_energy(recombination, [&]() { return stop; });
        else
            ledger.energy.charge_collected += EnergyAudit::quantize(recombination);
        if (tracks) tracks->push_back({impact.position, stop, length, trapped, k_e});
    }
}

DepositLedger run_gamma_shard(const GammaImpact& impact, const Chip& chip, const DeviceMaterials& mats,
                              const TransportConfig& cfg, std::uint64_t seed, std::uint64_t first,
                              std::uint64_t count) {
    if (!chip.contains(impact.position, 0.0)) throw ValidationError({"gamma: impact position lies outside the chip"});
    if (!(impact.deposit_energy > 0)) throw ValidationError({"gamma: deposit energy must be positive"});
    const PhononTracker tr(chip, mats, cfg);
    auto ledger = parallel_particles(tr, seed, first, count, [&](Rng& rng, DepositLedger& l, WorkerScratch& s) {
        s.queue.clear();
        emit_pair_phonons(tr, impact, rng, l, s.queue);
        PhononState none;
        none.alive = false;
        tr.run(none, rng, l, s.queue, s.cascade);
    });
    ledger.source_kind = SourceKind::Gamma;
    ledger.source_size = count;
    return ledger;
}

DepositLedger run_gamma(const GammaImpact& impact, const Chip& chip, const DeviceMaterials& mats,
                        const TransportConfig& cfg, std::uint64_t seed, std::uint64_t n_pairs) {
    if (n_pairs == 0) throw ValidationError({"gamma: number of simulated pairs must be positive"});
    return run_gamma_shard(impact, chip, mats, cfg, seed, 0, n_pairs);
}

CausticMap run_caustics(const Chip& chip, const SubstrateParams& s, const CausticConfig& cfg, std::uint64_t seed) {
    if (cfg.bins <= 0 || !(cfg.half_width > 0)) throw ValidationError({"caustics: bins and window must be positive"});
    const PhononModel model(s, true);
    CausticMap map;
    map.bins = cfg.bins;
    map.half_width = cfg.half_width;
    map.counts.assign(static_cast<std::size_t>(cfg.bins) * cfg.bins, 0);

    unsigned nw = cfg.workers ? cfg.workers : std::max(1u, std::thread::hardware_concurrency());
    std::vector<std::vector<std::uint64_t>> partial(nw, std::vector<std::uint64_t>(map.counts.size(), 0));
    std::vector<std::uint64_t> outside(nw, 0);
    std::atomic<std::uint64_t> next{0};
    constexpr std::uint64_t chunk = 1024;
    const Vec3 origin{0, 0, chip.geometry().thickness};
    auto work = [&](unsigned w) {
        for (;;) {
            const std::uint64_t c = next.fetch_add(chunk);
            if (c >= cfg.phonons) break;
            const std::uint64_t end = std::min(cfg.phonons, c + chunk);
            for (std::uint64_t i = c; i < end; ++i) {
                Rng rng = make_stream(seed, i);
                Vec3 v;
                do {
                    const Vec3 k = sample_isotropic(rng);
                    v = model.group_velocity(k, model.sample_branch(rng));
                } while (v.z >= 0);
                SurfaceHit hit = chip.ray_to_boundary(origin, v);
                if (hit.face == Face::Bottom) {
                    // specular: z is a mirror plane of the cubic lattice, so only v.z flips
                    v.z = -v.z;
                    hit = chip.ray_to_boundary(hit.point, v);
                }
                if (hit.face != Face::Top) {
                    ++outside[w];
                    continue;
                }
                const double fx = (hit.point.x + cfg.half_width) / (2 * cfg.half_width);
                const double fy = (hit.point.y + cfg.half_width) / (2 * cfg.half_width);
                if (fx < 0 || fx >= 1 || fy < 0 || fy >= 1) {
                    ++outside[w];
                    continue;
                }
                const int ix = static_cast<int>(fx * cfg.bins), iy = static_cast<int>(fy * cfg.bins);
                ++partial[w][static_cast<std::size_t>(iy) * cfg.bins + ix];
            }
        }
    };
    if (nw <= 1) {
        work(0);
    } else {
        std::vector<std::thread> threads;
        for (unsigned w = 0; w < nw; ++w) threads.emplace_back(work, w);
        for (auto& t : threads) t.join();
    }
    for (unsigned w = 0; w < nw; ++w) {
        for (std::size_t i = 0; i < map.counts.size(); ++i) map.counts[i] += partial[w][i];
        map.outside += outside[w];
    }
    return map;
}

}  // namespace qpsim
