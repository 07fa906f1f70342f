#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "qpsim/cascade.hpp"
#include "qpsim/crystal.hpp"
#include "qpsim/geometry.hpp"
#include "qpsim/ledger.hpp"
#include "qpsim/materials.hpp"
#include "qpsim/rng.hpp"

namespace qpsim {

struct PhononState {
    Vec3 position;
    Vec3 k_direction;
    Vec3 velocity;  // group velocity, um/ns
    Branch branch = Branch::SlowTransverse;
    double energy = 0;  // meV
    double time = 0;    // ns
    bool alive = true;
};

struct TransportConfig {
    double bin_width = 1000;   // ns
    double max_time = 1.0e6;   // ns
    bool anisotropic = false;
    bool kill_subthreshold = true;
    bool bulk_scattering = true;
    DecayKernel decay_kernel = DecayKernel::Standard;
    unsigned workers = 0;      // 0 = hardware concurrency
    std::uint64_t chunk_size = 64;

    void validate() const;
    std::size_t n_bins() const;
};

// Films seen by the substrate: ground plane, junction electrodes, islands.
struct DeviceMaterials {
    SubstrateParams substrate;
    SuperconductingFilm groundplane;
    SuperconductingFilm junction;
    std::optional<SuperconductingFilm> island_sc;
    std::optional<NormalMetalFilm> island_nm;

    // Junction gap is the average over a top/bottom bilayer; electrode film thickness in nm.
    static DeviceMaterials build(const MaterialDatabase& db, const ChipGeometry& g, double bilayer_top_nm = 40,
                                 double bilayer_bottom_nm = 80, double electrode_thickness_nm = 120);
    double junction_gap() const { return junction.gap(); }  // meV
    double threshold() const { return 2.0 * junction.gap(); }
};

struct InjectionSource {
    double x = 0, y = 0;       // on the top face, um
    double phonon_energy = 0;  // meV
    std::uint64_t count = 0;
};

InjectionSource make_injection_source(const ChipGeometry& g, const DeviceMaterials& m, std::uint64_t count,
                                      std::optional<double> energy_override = std::nullopt);

struct GammaImpact {
    Vec3 position;
    double deposit_energy = 100;  // keV
    std::uint64_t n_eh(double pair_energy_eV) const;
};

// Steps single phonons through the chip. Immutable and shared by workers.
class PhononTracker {
public:
    PhononTracker(const Chip& chip, const DeviceMaterials& mats, const TransportConfig& cfg);

    const Chip& chip() const { return chip_; }
    const PhononModel& model() const { return model_; }
    const TransportConfig& config() const { return cfg_; }
    double threshold() const { return threshold_; }

    PhononState make_phonon(const Vec3& pos, const Vec3& k, Branch b, double energy, double time) const;

    // Queues a new phonon, or books it as dropped when it is sub-threshold.
    void emit(const PhononState& p, std::vector<PhononState>& queue, DepositLedger& ledger) const;

    // Advances p to its next bulk scatter or boundary event. New phonons are
    // appended to queue; energy and QP deposits go to the ledger.
    void step(PhononState& p, Rng& rng, DepositLedger& ledger, std::vector<PhononState>& queue,
              CascadeOutcome& scratch) const;

    // Tracks p and all of its descendants to termination.
    void run(PhononState p, Rng& rng, DepositLedger& ledger, std::vector<PhononState>& queue,
             CascadeOutcome& scratch) const;

    DepositLedger make_ledger() const;

private:
    void diffuse_reflect(PhononState& p, Rng& rng, const Vec3& normal) const;
    void book_film(const CascadeOutcome& out, RegionKind kind, int electrode, const PhononState& p,
                   std::vector<PhononState>& queue, DepositLedger& ledger, Rng& rng, const Vec3& normal) const;
    Vec3 sample_direction_into(Rng& rng, const Vec3& normal, Branch b, bool cosine, Vec3& velocity) const;

    const Chip& chip_;
    DeviceMaterials mats_;
    TransportConfig cfg_;
    PhononModel model_;
    double threshold_;
};

// Per-particle random streams are derived from (seed, global particle index),
// so any split of [first, first + count) merges to the same ledger.
DepositLedger run_injection(const InjectionSource& src, const Chip& chip, const DeviceMaterials& mats,
                            const TransportConfig& cfg, std::uint64_t seed);
DepositLedger run_injection_shard(const InjectionSource& src, const Chip& chip, const DeviceMaterials& mats,
                                  const TransportConfig& cfg, std::uint64_t seed, std::uint64_t first,
                                  std::uint64_t count);

DepositLedger run_gamma(const GammaImpact& impact, const Chip& chip, const DeviceMaterials& mats,
                        const TransportConfig& cfg, std::uint64_t seed, std::uint64_t n_pairs);
DepositLedger run_gamma_shard(const GammaImpact& impact, const Chip& chip, const DeviceMaterials& mats,
                              const TransportConfig& cfg, std::uint64_t seed, std::uint64_t first,
                              std::uint64_t count);

// Simplified charge model for one e-h pair: Debye phonon emission along
// straight tracks with exponential stopping distances.
struct ChargeTrack {
    Vec3 start, stop;
    double intended_length = 0;  // um
    bool trapped = false;
    double kinetic = 0;  // meV
};
void emit_pair_phonons(const PhononTracker& tr, const GammaImpact& impact, Rng& rng, DepositLedger& ledger,
                       std::vector<PhononState>& queue, std::vector<ChargeTrack>* tracks = nullptr);

struct CausticConfig {
    std::uint64_t phonons = 1000000;
    int bins = 24;
    double half_width = 1500;  // um, histogram window about the source
    unsigned workers = 0;
};

struct CausticMap {
    int bins = 0;
    double half_width = 0;
    std::vector<std::uint64_t> counts;  // row-major [iy * bins + ix]
    std::uint64_t outside = 0;
    std::uint64_t count(int ix, int iy) const { return counts[static_cast<std::size_t>(iy) * bins + ix]; }
};

// Ballistic point source at the centre of the top face emitting downward. The
// back side reflects specularly; first arrivals back on the top face are
// histogrammed about the source.
CausticMap run_caustics(const Chip& chip, const SubstrateParams& s, const CausticConfig& cfg, std::uint64_t seed);

}  // namespace qpsim
