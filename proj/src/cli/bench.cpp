#include "onionchain/cli.hpp"
#include "onionchain/error.hpp"
#include "onionchain/simnet.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <numeric>
#include <ostream>

namespace onionchain::cli {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_us(Clock::time_point since)
{
    return std::chrono::duration<double, std::micro>(Clock::now() - since).count();
}

BenchRecord summarize(std::string protocol, std::size_t relays, std::size_t bits, const std::vector<double>& samples)
{
    BenchRecord r;
    r.protocol = std::move(protocol);
    r.relays = relays;
    r.payload_bits = bits;
    r.reps = samples.size();
    auto [lo, hi] = std::minmax_element(samples.begin(), samples.end());
    r.min_us = *lo;
    r.max_us = *hi;
    r.mean_us = std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(samples.size());
    // Rounding in the sum can push a constant series a hair outside [min, max].
    r.mean_us = std::clamp(r.mean_us, r.min_us, r.max_us);
    return r;
}

std::pair<BenchRecord, BenchRecord> measure(std::size_t relays, std::size_t bits, const BenchOptions& opt)
{
    if (opt.reps == 0)
        throw Error(Errc::InvalidArgument, "reps must be at least 1");

    std::vector<double> transmit_us, disclose_us;
    std::size_t evidence = 0, pleas = 0;
    bool correct = true;

    const std::size_t runs = opt.reps + (opt.include_cold ? 0 : 1);
    for (std::size_t rep = 0; rep < runs; ++rep) {
        auto net = simnet::spawn_network(std::max(simnet::kMinMembers, relays + 4), 3, opt.seed + rep);
        auto ids = net->members();
        const PartyId t = ids[0];
        const PartyId r = ids[1];
        auto m = simnet::make_message(*net, bits);

        auto start = Clock::now();
        auto receipt = onion::transmit(*net, t, r, m, relays);
        double t_us = elapsed_us(start);

        start = Clock::now();
        auto run = simnet::disclose(*net, r, m.digest(), receipt.evidence.back());
        double d_us = elapsed_us(start);

        if (!opt.include_cold && rep == 0)
            continue;
        transmit_us.push_back(t_us);
        disclose_us.push_back(d_us);
        evidence = receipt.evidence.size();
        pleas = run.outcome.transcript.size();
        correct = correct && run.culprit.party == t &&
                  run.culprit.reason == disclosure::CulpritReason::TransmitterOrigin;
    }

    auto tx = summarize("transmit", relays, bits, transmit_us);
    tx.evidence_per_message = evidence;
    auto dx = summarize("disclose", relays, bits, disclose_us);
    dx.evidence_per_message = pleas;
    dx.verdicts_correct = correct;
    return {tx, dx};
}

}  // namespace

std::vector<BenchRecord> bench_relays(const std::vector<std::size_t>& relay_counts, const BenchOptions& options)
{
    std::vector<BenchRecord> out;
    for (auto n : relay_counts) {
        auto [tx, dx] = measure(n, options.payload_bits, options);
        out.push_back(std::move(tx));
        out.push_back(std::move(dx));
    }
    return out;
}

std::vector<BenchRecord> bench_payload(const std::vector<std::size_t>& sizes_bits, std::size_t relays,
                                       const BenchOptions& options)
{
    std::vector<BenchRecord> out;
    for (auto bits : sizes_bits) {
        auto [tx, dx] = measure(relays, bits, options);
        out.push_back(std::move(tx));
        out.push_back(std::move(dx));
    }
    return out;
}

void write_csv(std::ostream& out, std::span<const BenchRecord> records)
{
    out << kCsvHeader << '\n';
    char buf[128];
    for (const auto& r : records) {
        std::snprintf(buf, sizeof buf, "%.3f,%.3f,%.3f", r.mean_us, r.min_us, r.max_us);
        out << r.protocol << ',' << r.relays << ',' << r.payload_bits << ',' << r.reps << ',' << buf << '\n';
    }
}

}  // namespace onionchain::cli
