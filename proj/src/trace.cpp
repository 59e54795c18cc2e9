#include "tvlink/trace.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "tvlink/errors.hpp"

namespace tvlink {

namespace {

std::string strip_cr(std::string line) {
    if (!line.empty() && line.back() == '\r')
        line.pop_back();
    return line;
}

// 17 significant digits: always enough to reproduce the double exactly.
void append_double(std::string& out, double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out += buf;
}

// Shortest representation that still round-trips, for the metadata line.
void append_double_shortest(std::string& out, double v) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, res.ptr);
}

} // namespace

DeliverySchedule parse_mahimahi(std::istream& in, int mtu_bytes) {
    if (mtu_bytes <= 0)
        throw ParamError("mtu must be positive");
    DeliverySchedule sched;
    sched.mtu_bytes = mtu_bytes;
    std::string raw;
    size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string line = strip_cr(raw);
        if (line.empty())
            continue;
        int64_t value = 0;
        for (char c : line) {
            if (!std::isdigit(static_cast<unsigned char>(c)))
                throw IoError("trace line " + std::to_string(line_no) +
                              ": expected a non-negative integer, got \"" + line + "\"");
            value = value * 10 + (c - '0');
            if (value < 0)
                throw IoError("trace line " + std::to_string(line_no) + ": timestamp overflow");
        }
        if (!sched.timestamps_ms.empty() && value < sched.timestamps_ms.back())
            throw IoError("trace line " + std::to_string(line_no) +
                          ": timestamps must be non-decreasing");
        sched.timestamps_ms.push_back(value);
    }
    if (sched.timestamps_ms.empty())
        throw IoError("empty trace");
    return sched;
}

IngestResult to_capacity_trace(const DeliverySchedule& sched, double T, double floor_bps) {
    if (!(T > 0.0))
        throw ParamError("round duration T must be positive");
    if (sched.timestamps_ms.empty())
        throw ParamError("schedule is empty");
    if (floor_bps < 0.0)
        floor_bps = sched.mtu_bytes * 8.0 / T;

    const double window_ms = T * 1000.0;
    const double last_ms = static_cast<double>(sched.timestamps_ms.back());
    // Window i is full iff (i+1)*window <= last timestamp; the slack absorbs
    // rounding when the duration is an exact multiple of the window.
    const size_t full_windows = static_cast<size_t>(std::floor(last_ms / window_ms + 1e-9));
    if (full_windows == 0)
        throw ParamError("trace shorter than one round (T too large)");

    IngestResult result;
    result.trace.round_duration_s = T;
    result.trace.origin = "parsed";
    result.trace.mtu_bytes = sched.mtu_bytes;
    result.trace.mu_bps.reserve(full_windows);

    const double bits_per_opportunity = sched.mtu_bytes * 8.0;
    size_t pos = 0;
    for (size_t w = 0; w < full_windows; ++w) {
        const double window_end = (w + 1) * window_ms;
        size_t count = 0;
        while (pos < sched.timestamps_ms.size() &&
               static_cast<double>(sched.timestamps_ms[pos]) < window_end) {
            ++count;
            ++pos;
        }
        double mu = static_cast<double>(count) * bits_per_opportunity / T;
        if (mu < floor_bps) {
            mu = floor_bps;
            ++result.floored_rounds;
        }
        result.trace.mu_bps.push_back(mu);
    }
    return result;
}

void write_capacity_csv(const CapacityTrace& trace, std::ostream& out) {
    out << capacity_csv_string(trace);
}

std::string capacity_csv_string(const CapacityTrace& trace) {
    if (trace.mu_bps.empty())
        throw ParamError("cannot serialize an empty capacity trace");
    std::string out;
    out.reserve(trace.mu_bps.size() * 24 + 64);
    out += "# T=";
    append_double_shortest(out, trace.round_duration_s);
    out += " mtu=" + std::to_string(trace.mtu_bytes);
    out += " origin=" + trace.origin + "\n";
    out += "round,mu_bps\n";
    for (size_t i = 0; i < trace.mu_bps.size(); ++i) {
        out += std::to_string(i);
        out += ',';
        append_double(out, trace.mu_bps[i]);
        out += '\n';
    }
    return out;
}

CapacityTrace read_capacity_csv(std::istream& in) {
    std::string meta;
    if (!std::getline(in, meta))
        throw IoError("capacity CSV: missing metadata line");
    meta = strip_cr(meta);
    CapacityTrace trace;
    {
        double T = 0.0;
        int mtu = 0;
        char origin[64] = {0};
        if (std::sscanf(meta.c_str(), "# T=%lf mtu=%d origin=%63s", &T, &mtu, origin) != 3)
            throw IoError("capacity CSV: malformed metadata line \"" + meta + "\"");
        if (!(T > 0.0))
            throw IoError("capacity CSV: non-positive T in metadata");
        if (mtu <= 0)
            throw IoError("capacity CSV: non-positive mtu in metadata");
        trace.round_duration_s = T;
        trace.mtu_bytes = mtu;
        trace.origin = origin;
    }
    std::string header;
    if (!std::getline(in, header) || strip_cr(header) != "round,mu_bps")
        throw IoError("capacity CSV: expected header \"round,mu_bps\"");

    std::string line;
    size_t row = 0;
    while (std::getline(in, line)) {
        line = strip_cr(line);
        if (line.empty())
            continue;
        size_t expected_round = 0;
        double mu = 0.0;
        std::istringstream cells(line);
        std::string cell;
        if (!std::getline(cells, cell, ','))
            throw IoError("capacity CSV row " + std::to_string(row) + ": missing round cell");
        try {
            expected_round = std::stoul(cell);
        } catch (...) {
            throw IoError("capacity CSV row " + std::to_string(row) + ": non-numeric round cell");
        }
        if (expected_round != row)
            throw IoError("capacity CSV row " + std::to_string(row) + ": out-of-order round index");
        if (!std::getline(cells, cell, ','))
            throw IoError("capacity CSV row " + std::to_string(row) + ": missing mu_bps cell");
        try {
            size_t consumed = 0;
            mu = std::stod(cell, &consumed);
            if (consumed != cell.size())
                throw std::invalid_argument("trailing characters");
        } catch (...) {
            throw IoError("capacity CSV row " + std::to_string(row) + ": non-numeric mu_bps cell");
        }
        if (!(mu > 0.0) || !std::isfinite(mu))
            throw IoError("capacity CSV row " + std::to_string(row) +
                          ": mu_bps must be positive and finite");
        trace.mu_bps.push_back(mu);
        ++row;
    }
    if (trace.mu_bps.empty())
        throw IoError("capacity CSV: no data rows");
    return trace;
}

CapacityTrace capacity_trace_from_csv_string(const std::string& text) {
    std::istringstream in(text);
    return read_capacity_csv(in);
}

} // namespace tvlink
