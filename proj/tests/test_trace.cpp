#include <doctest.h>

#include <cmath>
#include <sstream>

#include "tvlink/errors.hpp"
#include "tvlink/rng.hpp"
#include "tvlink/trace.hpp"

using namespace tvlink;

namespace {

DeliverySchedule parse_text(const std::string& text, int mtu = 1500) {
    std::istringstream in(text);
    return parse_mahimahi(in, mtu);
}

} // namespace

TEST_CASE("parse_mahimahi transcribes opportunities") {
    const DeliverySchedule s = parse_text("0\n50\n50\n100");
    REQUIRE(s.timestamps_ms.size() == 4);
    CHECK(s.timestamps_ms[0] == 0);
    CHECK(s.timestamps_ms[1] == 50);
    CHECK(s.timestamps_ms[2] == 50);
    CHECK(s.timestamps_ms[3] == 100);
    CHECK(s.mtu_bytes == 1500);
}

TEST_CASE("parse_mahimahi handles CRLF and blank lines") {
    const DeliverySchedule s = parse_text("10\r\n20\r\n\r\n30\n");
    REQUIRE(s.timestamps_ms.size() == 3);
    CHECK(s.timestamps_ms.back() == 30);
}

TEST_CASE("parse_mahimahi rejects bad input with positions") {
    CHECK_THROWS_WITH_AS(parse_text(""), "empty trace", IoError);
    try {
        parse_text("10\n5");
        FAIL("expected ordering error");
    } catch (const IoError& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
    try {
        parse_text("10\nabc\n20");
        FAIL("expected parse error");
    } catch (const IoError& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
}

TEST_CASE("to_capacity_trace aggregates full windows") {
    const DeliverySchedule s = parse_text("0\n50\n50\n100");
    const IngestResult r = to_capacity_trace(s, 0.1);
    REQUIRE(r.trace.rounds() == 1);
    // Three opportunities land in [0, 100); the one at 100 starts the
    // discarded partial window.
    CHECK(r.trace.mu_bps[0] == doctest::Approx(3 * 1500 * 8 / 0.1).epsilon(1e-15));
    CHECK(r.floored_rounds == 0);
    CHECK(r.trace.origin == "parsed");
}

TEST_CASE("to_capacity_trace floors empty windows") {
    // Window [100, 200) has no opportunities.
    const DeliverySchedule s = parse_text("0\n50\n250\n300");
    const IngestResult r = to_capacity_trace(s, 0.1, 120000.0);
    REQUIRE(r.trace.rounds() == 3);
    CHECK(r.trace.mu_bps[1] == 120000.0);
    CHECK(r.floored_rounds == 1);
}

TEST_CASE("to_capacity_trace parameter validation") {
    const DeliverySchedule s = parse_text("0\n50\n50\n100");
    CHECK_THROWS_AS(to_capacity_trace(s, 0.0), ParamError);
    CHECK_THROWS_AS(to_capacity_trace(s, -0.1), ParamError);
    // T larger than the trace leaves no full window.
    CHECK_THROWS_AS(to_capacity_trace(s, 10.0), ParamError);
}

TEST_CASE("capacity CSV format and round trip") {
    CapacityTrace trace;
    trace.round_duration_s = 0.1;
    trace.mu_bps = {1e6, 2e6};
    trace.origin = "parsed";
    const std::string csv = capacity_csv_string(trace);
    CHECK(csv == "# T=0.1 mtu=1500 origin=parsed\nround,mu_bps\n0,1000000\n1,2000000\n");

    const CapacityTrace back = capacity_trace_from_csv_string(csv);
    CHECK(back.round_duration_s == trace.round_duration_s);
    CHECK(back.mu_bps == trace.mu_bps);
    CHECK(back.origin == trace.origin);
    CHECK(back.mtu_bytes == trace.mtu_bytes);
}

TEST_CASE("capacity CSV round trip preserves awkward doubles") {
    CapacityTrace trace;
    trace.round_duration_s = 1.0 / 3.0;
    trace.origin = "synthetic-mif";
    Rng rng(7);
    for (int i = 0; i < 200; ++i)
        trace.mu_bps.push_back(1e6 * std::exp(2.0 * rng.next_unit() - 1.0));
    const CapacityTrace back = capacity_trace_from_csv_string(capacity_csv_string(trace));
    CHECK(back.round_duration_s == trace.round_duration_s);
    CHECK(back.mu_bps == trace.mu_bps);
}

TEST_CASE("capacity CSV rejects malformed input") {
    CHECK_THROWS_AS(capacity_trace_from_csv_string("bogus\nround,mu_bps\n0,1\n"), IoError);
    CHECK_THROWS_AS(
        capacity_trace_from_csv_string("# T=0.1 mtu=1500 origin=parsed\nwrong header\n0,1\n"),
        IoError);
    CHECK_THROWS_AS(capacity_trace_from_csv_string(
                        "# T=0.1 mtu=1500 origin=parsed\nround,mu_bps\n0,-5\n"),
                    IoError);
    CHECK_THROWS_AS(capacity_trace_from_csv_string(
                        "# T=0.1 mtu=1500 origin=parsed\nround,mu_bps\n0,abc\n"),
                    IoError);
    try {
        capacity_trace_from_csv_string("# T=0.1 mtu=1500 origin=parsed\nround,mu_bps\n0,-5\n");
        FAIL("expected format error");
    } catch (const IoError& e) {
        CHECK(std::string(e.what()).find("row 0") != std::string::npos);
    }
}

TEST_CASE("parsing is total over arbitrary byte streams") {
    Rng rng(424242);
    const char alphabet[] = "0123456789 \n\r-x.";
    for (int trial = 0; trial < 200; ++trial) {
        std::string text;
        const int len = static_cast<int>(rng.next_unit() * 40);
        for (int i = 0; i < len; ++i)
            text += alphabet[static_cast<size_t>(rng.next_unit() * (sizeof(alphabet) - 1))];
        try {
            const DeliverySchedule s = parse_text(text);
            CHECK(!s.timestamps_ms.empty());
            CHECK(std::is_sorted(s.timestamps_ms.begin(), s.timestamps_ms.end()));
        } catch (const IoError&) {
            // positioned error is the other allowed outcome
        }
    }
}

TEST_CASE("conservation: full-window opportunity counts survive the unit change") {
    Rng rng(12345);
    for (int trial = 0; trial < 20; ++trial) {
        DeliverySchedule sched;
        sched.mtu_bytes = 1500;
        // Every 100 ms window gets 1..9 opportunities so nothing floors.
        const int windows = 5 + static_cast<int>(rng.next_unit() * 20);
        std::vector<size_t> per_window;
        for (int w = 0; w < windows; ++w) {
            const int k = 1 + static_cast<int>(rng.next_unit() * 9);
            per_window.push_back(k);
            for (int i = 0; i < k; ++i)
                sched.timestamps_ms.push_back(w * 100 +
                                              static_cast<int64_t>(rng.next_unit() * 100));
        }
        std::sort(sched.timestamps_ms.begin(), sched.timestamps_ms.end());
        // Terminator so the last window is complete.
        sched.timestamps_ms.push_back(windows * 100);

        const IngestResult r = to_capacity_trace(sched, 0.1);
        REQUIRE(r.trace.rounds() == static_cast<size_t>(windows));
        CHECK(r.floored_rounds == 0);
        long long recovered = 0;
        for (double mu : r.trace.mu_bps) {
            const double count = mu * 0.1 / (8.0 * 1500.0);
            CHECK(count == std::floor(count));
            recovered += static_cast<long long>(count);
        }
        long long expected = 0;
        for (size_t k : per_window)
            expected += static_cast<long long>(k);
        CHECK(recovered == expected);
    }
}
