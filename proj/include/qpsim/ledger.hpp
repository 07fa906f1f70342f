#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace qpsim {

enum class SourceKind : std::uint8_t { None, Injection, Gamma };

const char* source_kind_name(SourceKind k);

// Energy bookkeeping in fixed point (1 unit = 1e-6 meV) so that sums do not
// depend on the order in which worker ledgers are merged.
struct EnergyAudit {
    static constexpr double kUnitsPerMeV = 1e6;

    std::int64_t source = 0;
    std::int64_t electrodes = 0;
    std::int64_t groundplane = 0;
    std::int64_t islands = 0;
    std::int64_t wall_escape = 0;
    std::int64_t dropped = 0;
    std::int64_t in_flight = 0;
    std::int64_t charge_collected = 0;

    static std::int64_t quantize(double e_meV) { return std::llround(e_meV * kUnitsPerMeV); }
    static double to_meV(std::int64_t q) { return static_cast<double>(q) / kUnitsPerMeV; }

    std::int64_t accounted() const {
        return electrodes + groundplane + islands + wall_escape + dropped + in_flight + charge_collected;
    }
    // |source - accounted| / source
    double closure_error() const;
    void add(const EnergyAudit& o);
    bool operator==(const EnergyAudit&) const = default;
};

class DepositLedger {
public:
    DepositLedger() = default;
    DepositLedger(std::size_t n_electrodes, std::size_t n_bins, double bin_width_ns, std::uint64_t geometry_hash);

    bool empty_shape() const { return n_bins_ == 0 && n_electrodes_ == 0; }
    std::size_t n_electrodes() const { return n_electrodes_; }
    std::size_t n_bins() const { return n_bins_; }
    double bin_width() const { return bin_width_; }
    std::uint64_t geometry_hash() const { return geometry_hash_; }

    void record(int electrode, double time_ns, std::int64_t n_qp);
    std::int64_t count(std::size_t electrode, std::size_t bin) const { return counts_[electrode * n_bins_ + bin]; }
    std::span<const std::int64_t> electrode_counts(std::size_t electrode) const {
        return {counts_.data() + electrode * n_bins_, n_bins_};
    }
    std::int64_t total_qp(std::size_t electrode) const;
    std::int64_t total_qp() const;

    // Adds o into this ledger; shapes and geometry must agree.
    void merge_in(const DepositLedger& o);
    bool operator==(const DepositLedger&) const = default;

    SourceKind source_kind = SourceKind::None;
    std::uint64_t source_size = 0;  // simulated phonons or e-h pairs
    std::uint64_t escape_count = 0;
    std::uint64_t qp_late = 0;      // QPs created after the last bin
    EnergyAudit energy;

private:
    std::size_t n_electrodes_ = 0;
    std::size_t n_bins_ = 0;
    double bin_width_ = 0;
    std::uint64_t geometry_hash_ = 0;
    std::vector<std::int64_t> counts_;
};

DepositLedger merge(const DepositLedger& a, const DepositLedger& b);
DepositLedger merge(std::span<const DepositLedger> ledgers);

// CSV: electrode_id,t_bin_start_ns,n_qp_count (non-zero rows only).
std::string ledger_to_csv(const DepositLedger& l);
DepositLedger ledger_from_csv(const std::string& csv, std::size_t n_electrodes, std::size_t n_bins,
                              double bin_width_ns, std::uint64_t geometry_hash);

}  // namespace qpsim
