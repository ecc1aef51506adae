#include "onionchain/cli.hpp"
#include "support.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace onionchain;
using namespace onionchain::cli;
using onionchain::cli::run_cli;
namespace fs = std::filesystem;

namespace {

struct CliRun {
    int code;
    std::string out;
    std::string err;
};

CliRun invoke(std::vector<std::string> args)
{
    std::ostringstream out, err;
    int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
protected:
    fs::path dir;

    void SetUp() override
    {
        dir = fs::temp_directory_path() /
              ("onionchain-cli-" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir);
    }
    void TearDown() override { fs::remove_all(dir); }

    CliRun in_state(std::vector<std::string> args)
    {
        args.insert(args.begin(), {"--state", dir.string()});
        return invoke(std::move(args));
    }
};

std::string field(const std::string& text, const std::string& key)
{
    std::istringstream in(text);
    std::string k, v;
    while (in >> k >> v)
        if (k == key)
            return v;
    return {};
}

}  // namespace

TEST(Cli, HelpAndUsage)
{
    auto help = invoke({"--help"});
    EXPECT_EQ(help.code, 0);
    EXPECT_NE(help.out.find("disclose"), std::string::npos);
    EXPECT_EQ(invoke({"frobnicate"}).code, kExitUsage);
    EXPECT_EQ(invoke({}).code, kExitUsage);
    EXPECT_EQ(invoke({"send", "--from", "x"}).code, kExitUsage);
    EXPECT_EQ(invoke({"attack", "sybil"}).code, kExitUsage);
    EXPECT_EQ(invoke({"bench", "relays", "--reps", "0"}).code, kExitUsage);
}

TEST_F(CliTest, SendThenDiscloseNamesTransmitter)
{
    auto reg = in_state({"register", "--id", "alice", "--seed", "5"});
    ASSERT_EQ(reg.code, 0) << reg.err;
    EXPECT_EQ(reg.out.size(), 65u);

    auto send = in_state({"send", "--from", "alice", "--to", "node-2", "--relays", "3", "--payload-bits", "128"});
    ASSERT_EQ(send.code, 0) << send.err;
    auto ev = field(send.out, "EV4");
    ASSERT_EQ(ev.size(), 64u);

    auto disc = in_state({"disclose", "--receiver", "node-2", "--evidence", ev});
    EXPECT_EQ(disc.code, 0) << disc.err;
    EXPECT_NE(disc.out.find("culprit alice TransmitterOrigin"), std::string::npos) << disc.out;
    EXPECT_EQ(std::count(disc.out.begin(), disc.out.end(), '\n'), 5);

    auto verify = invoke({"ledger", "verify", (dir / "chain.log").string()});
    EXPECT_EQ(verify.code, 0) << verify.out;
}

TEST_F(CliTest, CalumnyExitCode)
{
    ASSERT_EQ(in_state({"register", "--id", "alice"}).code, 0);
    auto send = in_state({"send", "--from", "alice", "--to", "node-2"});
    auto ev = field(send.out, "EV4");
    auto fake = crypto::digest(onionchain::testing::ascii("fake")).hex();
    auto disc = in_state({"disclose", "--receiver", "node-2", "--evidence", ev, "--accuse", fake});
    EXPECT_EQ(disc.code, kExitCalumniating);
    EXPECT_NE(disc.out.find("culprit node-2 CalumniatingReceiver"), std::string::npos);
}

TEST_F(CliTest, ErrorFamiliesMapToExitCodes)
{
    ASSERT_EQ(in_state({"register", "--id", "alice", "--seed", "1"}).code, 0);
    auto dup = in_state({"register", "--id", "mallory", "--seed", "1"});
    EXPECT_EQ(dup.code, 5);
    EXPECT_NE(dup.out.find("DuplicateKey"), std::string::npos);

    EXPECT_EQ(in_state({"send", "--from", "ghost", "--to", "node-2"}).code, 4);
    EXPECT_EQ(in_state({"send", "--from", "alice", "--to", "node-2", "--relays", "2"}).code, 6);
    EXPECT_EQ(in_state({"disclose", "--receiver", "node-2", "--evidence", std::string(64, 'a')}).code, 7);
    EXPECT_EQ(in_state({"disclose", "--receiver", "ghost", "--evidence", std::string(64, 'a')}).code, 8);
}

TEST_F(CliTest, StateReplayReproducesLedger)
{
    in_state({"register", "--id", "alice"});
    in_state({"send", "--from", "alice", "--to", "node-3"});
    std::ifstream first(dir / "chain.log");
    std::string before((std::istreambuf_iterator<char>(first)), {});
    // A failing command replays the log and rewrites the same prefix.
    in_state({"send", "--from", "ghost", "--to", "node-3"});
    std::ifstream second(dir / "chain.log");
    std::string after((std::istreambuf_iterator<char>(second)), {});
    EXPECT_EQ(before, after);
}

TEST_F(CliTest, LedgerVerifyDetectsTampering)
{
    in_state({"register", "--id", "alice"});
    in_state({"send", "--from", "alice", "--to", "node-3"});
    fs::path file = dir / "chain.log";
    std::ifstream in(file);
    std::string text((std::istreambuf_iterator<char>(in)), {});
    auto pos = text.rfind("T ") + 20;
    text[pos] = text[pos] == '0' ? '1' : '0';
    fs::path bad = dir / "bad.log";
    std::ofstream(bad) << text;
    EXPECT_EQ(invoke({"ledger", "verify", bad.string()}).code, kExitFailure);
    std::ofstream(bad) << "garbage\n";
    EXPECT_EQ(invoke({"ledger", "verify", bad.string()}).code, kExitFailure);
    EXPECT_EQ(invoke({"ledger", "verify", (dir / "missing").string()}).code, kExitFailure);
}

TEST_F(CliTest, AttackVerb)
{
    fs::create_directories(dir);
    auto trace = (dir / "trace.jsonl").string();
    auto r = invoke({"attack", "replay", "--nodes", "8", "--relays", "3", "--seed", "4", "--trace", trace});
    EXPECT_EQ(r.code, 0) << r.out << r.err;
    EXPECT_NE(r.out.find("discarded yes"), std::string::npos);
    EXPECT_TRUE(fs::file_size(trace) > 0);

    auto c = invoke({"attack", "collusion", "--nodes", "8", "--seed", "4"});
    EXPECT_EQ(c.code, 0) << c.out;
    EXPECT_NE(c.out.find("attack defeated"), std::string::npos);
}

TEST(Bench, SingleRepCollapsesStats)
{
    BenchOptions opt;
    opt.reps = 1;
    auto rows = bench_relays({3}, opt);
    ASSERT_EQ(rows.size(), 2u);
    for (const auto& r : rows) {
        EXPECT_EQ(r.reps, 1u);
        EXPECT_EQ(r.mean_us, r.min_us);
        EXPECT_EQ(r.max_us, r.min_us);
    }
    EXPECT_EQ(rows[0].protocol, "transmit");
    EXPECT_EQ(rows[0].evidence_per_message, 4u);
    EXPECT_EQ(rows[1].protocol, "disclose");
    EXPECT_TRUE(rows[1].verdicts_correct);
}

TEST(Bench, CsvSchemaAndRowCount)
{
    BenchOptions opt;
    opt.reps = 2;
    auto rows = bench_relays({3, 5}, opt);
    std::ostringstream out;
    write_csv(out, rows);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, kCsvHeader);
    std::size_t n = 0;
    while (std::getline(in, line)) {
        EXPECT_EQ(std::count(line.begin(), line.end(), ','), 6);
        ++n;
    }
    EXPECT_EQ(n, 4u);
    for (const auto& r : rows) {
        EXPECT_LE(r.min_us, r.mean_us);
        EXPECT_LE(r.mean_us, r.max_us);
    }
}

TEST(Bench, EmptyPayloadAndStableEvidenceCounts)
{
    BenchOptions opt;
    opt.reps = 2;
    auto a = bench_payload({0, 256}, 3, opt);
    auto b = bench_payload({0, 256}, 3, opt);
    ASSERT_EQ(a.size(), 4u);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].evidence_per_message, b[i].evidence_per_message);
        EXPECT_TRUE(a[i].verdicts_correct);
    }
    EXPECT_EQ(a[0].payload_bits, 0u);
}

TEST(Bench, CliWritesCsvFile)
{
    auto file = (fs::temp_directory_path() / "onionchain-bench.csv").string();
    auto r = invoke({"bench", "relays", "--relays", "3", "--reps", "1", "--out", file});
    ASSERT_EQ(r.code, 0) << r.err;
    std::ifstream in(file);
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header, kCsvHeader);
    fs::remove(file);
}
