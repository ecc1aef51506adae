#pragma once

// Command-line driver and the benchmark sweeps behind `bench`.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace onionchain::cli {

struct BenchRecord {
    std::string protocol;  // transmit | disclose
    std::size_t relays = 0;
    std::size_t payload_bits = 0;
    std::size_t reps = 0;
    double mean_us = 0;
    double min_us = 0;
    double max_us = 0;

    // Not part of the CSV.
    std::size_t evidence_per_message = 0;  // committed evidence records (transmit) or pleas (disclose)
    bool verdicts_correct = true;          // disclose only: every run named the transmitter
};

struct BenchOptions {
    std::size_t payload_bits = 128;
    std::size_t reps = 30;
    std::uint64_t seed = 1;
    bool include_cold = false;  // count the first run instead of discarding it
};

/// Two rows (transmit, disclose) per relay count. Each repetition runs on a
/// fresh network; network setup is outside the timed region.
std::vector<BenchRecord> bench_relays(const std::vector<std::size_t>& relay_counts, const BenchOptions& options);
std::vector<BenchRecord> bench_payload(const std::vector<std::size_t>& sizes_bits, std::size_t relays,
                                       const BenchOptions& options);

inline constexpr const char* kCsvHeader = "protocol,relays,payload_bits,reps,mean_us,min_us,max_us";
void write_csv(std::ostream& out, std::span<const BenchRecord> records);

/// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;
// 3..8: crypto, ledger, registry, onion, disclosure, simnet error families.
inline constexpr int kExitRefusedPlea = 10;
inline constexpr int kExitForgedEvidence = 11;
inline constexpr int kExitCalumniating = 12;

/// `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace onionchain::cli
