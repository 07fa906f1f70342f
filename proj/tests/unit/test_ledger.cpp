#include <doctest.h>

#include "qpsim/errors.hpp"
#include "qpsim/ledger.hpp"

using namespace qpsim;

namespace {
DepositLedger sample(std::int64_t k) {
    DepositLedger l(4, 10, 1000, 77);
    l.record(0, 500, 2 * k);
    l.record(3, 9999, k);
    l.record(1, 20000, 1);  // past the last bin
    l.source_size = 100 * k;
    l.escape_count = 3;
    l.energy.source = 1000;
    l.energy.wall_escape = 1000;
    return l;
}
}  // namespace

TEST_CASE("record and totals") {
    const auto l = sample(1);
    CHECK(l.count(0, 0) == 2);
    CHECK(l.count(3, 9) == 1);
    CHECK(l.qp_late == 1);
    CHECK(l.total_qp() == 3);
    CHECK(l.total_qp(0) == 2);
}

TEST_CASE("merge identity and commutativity") {
    const auto a = sample(1), b = sample(5);
    CHECK(merge(a, DepositLedger{}) == a);
    CHECK(merge(DepositLedger{}, a) == a);
    CHECK(merge(a, b) == merge(b, a));
    const auto m = merge(a, b);
    CHECK(m.source_size == 600);
    CHECK(m.count(0, 0) == 12);
    CHECK(m.energy.source == 2000);
    CHECK(m.escape_count == 6);
}

TEST_CASE("merge rejects mismatched binning") {
    const auto a = sample(1);
    const DepositLedger c(4, 10, 500, 77), d(4, 10, 1000, 78), e(5, 10, 1000, 77);
    CHECK_THROWS_AS(merge(a, c), InvalidInput);
    CHECK_THROWS_AS(merge(a, d), InvalidInput);
    CHECK_THROWS_AS(merge(a, e), InvalidInput);
}

TEST_CASE("CSV round trip") {
    const auto a = sample(2);
    const std::string csv = ledger_to_csv(a);
    CHECK(csv.rfind("electrode_id,t_bin_start_ns,n_qp_count\n", 0) == 0);
    const auto b = ledger_from_csv(csv, 4, 10, 1000, 77);
    for (std::size_t e = 0; e < 4; ++e)
        for (std::size_t i = 0; i < 10; ++i) CHECK(a.count(e, i) == b.count(e, i));
    CHECK_THROWS_AS(ledger_from_csv("nonsense\n", 4, 10, 1000, 77), InvalidInput);
    CHECK_THROWS_AS(ledger_from_csv("electrode_id,t_bin_start_ns,n_qp_count\n9,0,1\n", 4, 10, 1000, 77),
                    InvalidInput);
}

TEST_CASE("energy audit closure") {
    EnergyAudit e;
    e.source = EnergyAudit::quantize(10.0);
    e.electrodes = EnergyAudit::quantize(4.0);
    e.dropped = EnergyAudit::quantize(6.0);
    CHECK(e.closure_error() == 0.0);
    e.dropped -= 1;
    CHECK(e.closure_error() > 0.0);
}
