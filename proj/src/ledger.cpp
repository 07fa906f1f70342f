#include "qpsim/ledger.hpp"

#include <numeric>
#include <sstream>

#include "qpsim/errors.hpp"

namespace qpsim {

const char* source_kind_name(SourceKind k) {
    switch (k) {
        case SourceKind::None: return "none";
        case SourceKind::Injection: return "injection";
        case SourceKind::Gamma: return "gamma";
    }
    return "?";
}

double EnergyAudit::closure_error() const {
    if (source == 0) return accounted() == 0 ? 0.0 : 1.0;
    return std::abs(static_cast<double>(source - accounted())) / static_cast<double>(source);
}

void EnergyAudit::add(const EnergyAudit& o) {
    source += o.source;
    electrodes += o.electrodes;
    groundplane += o.groundplane;
    islands += o.islands;
    wall_escape += o.wall_escape;
    dropped += o.dropped;
    in_flight += o.in_flight;
    charge_collected += o.charge_collected;
}

DepositLedger::DepositLedger(std::size_t n_electrodes, std::size_t n_bins, double bin_width_ns,
                             std::uint64_t geometry_hash)
    : n_electrodes_(n_electrodes),
      n_bins_(n_bins),
      bin_width_(bin_width_ns),
      geometry_hash_(geometry_hash),
      counts_(n_electrodes * n_bins, 0) {
    if (!(bin_width_ns > 0)) throw InvalidInput("ledger bin width must be positive");
}

void DepositLedger::record(int electrode, double t, std::int64_t n) {
    if (electrode < 0 || static_cast<std::size_t>(electrode) >= n_electrodes_)
        throw InvalidInput("electrode index out of range");
    const double b = std::floor(t / bin_width_);
    if (b >= 0 && b < static_cast<double>(n_bins_))
        counts_[static_cast<std::size_t>(electrode) * n_bins_ + static_cast<std::size_t>(b)] += n;
    else
        qp_late += static_cast<std::uint64_t>(n);
}

std::int64_t DepositLedger::total_qp(std::size_t e) const {
    auto s = electrode_counts(e);
    return std::accumulate(s.begin(), s.end(), std::int64_t{0});
}

std::int64_t DepositLedger::total_qp() const { return std::accumulate(counts_.begin(), counts_.end(), std::int64_t{0}); }

void DepositLedger::merge_in(const DepositLedger& o) {
    if (o.empty_shape() && o.source_size == 0) return;
    if (empty_shape() && source_size == 0) {
        *this = o;
        return;
    }
    if (n_electrodes_ != o.n_electrodes_ || n_bins_ != o.n_bins_ || bin_width_ != o.bin_width_)
        throw InvalidInput("cannot merge ledgers with different binning");
    if (geometry_hash_ != o.geometry_hash_) throw InvalidInput("cannot merge ledgers from different geometries");
    if (source_kind != o.source_kind && o.source_kind != SourceKind::None && source_kind != SourceKind::None)
        throw InvalidInput("cannot merge ledgers from different source kinds");
    if (source_kind == SourceKind::None) source_kind = o.source_kind;
    for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += o.counts_[i];
    source_size += o.source_size;
    escape_count += o.escape_count;
    qp_late += o.qp_late;
    energy.add(o.energy);
}

DepositLedger merge(const DepositLedger& a, const DepositLedger& b) {
    DepositLedger out = a;
    out.merge_in(b);
    return out;
}

DepositLedger merge(std::span<const DepositLedger> ledgers) {
    DepositLedger out;
    for (const auto& l : ledgers) out.merge_in(l);
    return out;
}

std::string ledger_to_csv(const DepositLedger& l) {
    std::ostringstream os;
    os << "electrode_id,t_bin_start_ns,n_qp_count\n";
    os.precision(12);
    for (std::size_t e = 0; e < l.n_electrodes(); ++e)
        for (std::size_t b = 0; b < l.n_bins(); ++b)
            if (const auto c = l.count(e, b)) os << e << ',' << static_cast<double>(b) * l.bin_width() << ',' << c << '\n';
    return os.str();
}

DepositLedger ledger_from_csv(const std::string& csv, std::size_t n_electrodes, std::size_t n_bins,
                              double bin_width_ns, std::uint64_t geometry_hash) {
    DepositLedger l(n_electrodes, n_bins, bin_width_ns, geometry_hash);
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    if (line.rfind("electrode_id", 0) != 0) throw InvalidInput("ledger CSV lacks the expected header");
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string a, b, c;
        if (!std::getline(ls, a, ',') || !std::getline(ls, b, ',') || !std::getline(ls, c))
            throw InvalidInput("ledger CSV line " + std::to_string(lineno) + " is malformed");
        const long e = std::stol(a);
        const double t = std::stod(b);
        const long long n = std::stoll(c);
        if (e < 0 || static_cast<std::size_t>(e) >= n_electrodes)
            throw InvalidInput("ledger CSV line " + std::to_string(lineno) + ": electrode out of range");
        l.record(static_cast<int>(e), t + 0.5 * bin_width_ns, n);
    }
    return l;
}

}  // namespace qpsim
