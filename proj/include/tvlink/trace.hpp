#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace tvlink {

// One entry per delivery opportunity: the millisecond at which one MTU-sized
// packet could be delivered. Timestamps are non-decreasing; repeats mean
// multiple opportunities in the same millisecond.
struct DeliverySchedule {
    std::vector<int64_t> timestamps_ms;
    int mtu_bytes = 1500;
};

// Per-round link capacities. Units: mu in bits/second, T in seconds,
// queue sizes elsewhere in bits. origin is one of "parsed", "synthetic-mif",
// "synthetic-smf".
struct CapacityTrace {
    std::vector<double> mu_bps;
    double round_duration_s = 0.1;
    std::string origin = "parsed";
    int mtu_bytes = 1500;

    size_t rounds() const { return mu_bps.size(); }
};

// Parses a Mahimahi packet-delivery trace: UTF-8 text, one non-negative
// decimal integer (milliseconds) per line, LF or CRLF, non-decreasing.
// Throws IoError with the offending line number on malformed or decreasing
// input, and on empty input.
DeliverySchedule parse_mahimahi(std::istream& in, int mtu_bytes = 1500);

struct IngestResult {
    CapacityTrace trace;
    int floored_rounds = 0; // rounds whose raw capacity fell below the floor
};

// Aggregates a schedule into rounds of duration T. Round i covers
// [i*T, (i+1)*T) in trace time; mu[i] = opportunities * mtu * 8 / T.
// Rounds below floor_bps are raised to it (and counted); the trailing
// partial round is discarded. floor_bps < 0 selects the default of one
// MTU per round (mtu * 8 / T).
IngestResult to_capacity_trace(const DeliverySchedule& sched, double T, double floor_bps = -1.0);

// Capacity CSV:
//   # T=<seconds> mtu=<bytes> origin=<tag>
//   round,mu_bps
//   0,<mu>
// mu is printed with 17 significant digits, so read(write(x)) reproduces the
// trace exactly.
void write_capacity_csv(const CapacityTrace& trace, std::ostream& out);
CapacityTrace read_capacity_csv(std::istream& in);

std::string capacity_csv_string(const CapacityTrace& trace);
CapacityTrace capacity_trace_from_csv_string(const std::string& text);

} // namespace tvlink
