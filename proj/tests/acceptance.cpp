// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include "generators.hpp"

#include "onionchain/cli.hpp"
#include "onionchain/disclosure.hpp"
#include "onionchain/error.hpp"
#include "onionchain/simnet.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

using namespace onionchain;
using namespace onionchain::testing;

namespace {

struct Verdict {
    bool ok = true;
    std::string detail;

    void fail(const std::string& why)
    {
        if (ok)
            detail = why;
        ok = false;
    }
};

using Criterion = std::function<Verdict()>;

// 1 -------------------------------------------------------------------------

Verdict honest_traceability()
{
    Verdict v;
    std::size_t runs = 0;
    for (std::size_t n : {3u, 5u, 10u}) {
        for (std::uint64_t i = 0; i < 100; ++i) {
            std::uint64_t seed = n * 1000 + i;
            std::mt19937_64 pick(seed);
            auto net = simnet::spawn_network(n + 2 + pick() % 6, 1 + pick() % 3, seed);
            auto before = simnet::count_evidence(net->ledger());
            simnet::ScenarioConfig cfg;
            cfg.relays = n;
            cfg.payload_bits = 8 + pick() % 512;
            auto o = simnet::run_scenario(*net, cfg);
            ++runs;
            const auto& out = *o.disclosure;
            std::string tag = "n=" + std::to_string(n) + " seed=" + std::to_string(seed) + ": ";
            if (out.culprit != disclosure::Culprit{o.transmitter, disclosure::CulpritReason::TransmitterOrigin})
                v.fail(tag + "walk named " + out.culprit.party.str());
            if (out.transcript.size() != n + 1)
                v.fail(tag + std::to_string(out.transcript.size()) + " pleas");
            if (o.receipt->evidence.size() != n + 1 || simnet::count_evidence(net->ledger()) - before != n + 1)
                v.fail(tag + "evidence count off");
            for (const auto& h : o.receipt->evidence)
                if (!net->ledger().is_committed(h))
                    v.fail(tag + "uncommitted evidence");
        }
    }
    if (v.ok)
        v.detail = std::to_string(runs) + " runs, all named the transmitter with n+1 pleas and n+1 evidence";
    return v;
}

// 2 -------------------------------------------------------------------------

Verdict attack_matrix()
{
    Verdict v;
    struct Row {
        simnet::ScenarioKind kind;
        simnet::MessengerVariant variant;
        bool refuse;
    };
    const std::vector<Row> rows{
        {simnet::ScenarioKind::MaliciousTransmitter, {}, false},
        {simnet::ScenarioKind::MaliciousMessenger, simnet::MessengerVariant::ForgedEvidence, false},
        {simnet::ScenarioKind::MaliciousMessenger, simnet::MessengerVariant::ForgedEvidence, true},
        {simnet::ScenarioKind::MaliciousMessenger, simnet::MessengerVariant::ForgedPacket, false},
        {simnet::ScenarioKind::Replay, {}, false},
        {simnet::ScenarioKind::Calumniating, {}, false},
        {simnet::ScenarioKind::Collusion, {}, false},
    };
    std::size_t runs = 0;
    for (const auto& row : rows) {
        for (std::uint64_t seed = 1; seed <= 20; ++seed) {
            auto net = simnet::spawn_network(10, 3, seed * 7919);
            simnet::ScenarioConfig cfg;
            cfg.kind = row.kind;
            cfg.messenger = row.variant;
            cfg.adversary_refuses_plea = row.refuse;
            std::string tag = std::string(simnet::to_string(row.kind)) + " seed=" + std::to_string(seed) + ": ";
            simnet::ScenarioOutcome o;
            try {
                o = simnet::run_scenario(*net, cfg);
            } catch (const Error& e) {
                v.fail(tag + "threw " + e.what());
                continue;
            }
            ++runs;

            if (row.kind == simnet::ScenarioKind::Replay) {
                if (!o.discarded || o.evidence_after_replay != o.evidence_before_replay)
                    v.fail(tag + "replay not discarded cleanly");
                continue;
            }
            if (!o.culprit) {
                v.fail(tag + "no verdict");
                continue;
            }
            const PartyId& who = o.culprit->party;
            PartyId scripted;
            switch (row.kind) {
            case simnet::ScenarioKind::MaliciousTransmitter: scripted = o.transmitter; break;
            case simnet::ScenarioKind::MaliciousMessenger: scripted = o.relays[1]; break;
            case simnet::ScenarioKind::Calumniating: scripted = o.receiver; break;
            default: break;
            }
            if (!o.adversaries.contains(who))
                v.fail(tag + "blamed non-adversary " + who.str());
            if (!scripted.empty() && who != scripted)
                v.fail(tag + "blamed " + who.str() + ", expected " + scripted.str());
            for (const auto& r : o.relays)
                if (r == who && !o.adversaries.contains(r))
                    v.fail(tag + "honest relay " + r.str() + " blamed");
        }
    }
    if (v.ok)
        v.detail = std::to_string(runs) + " runs over 5 attacks (3 messenger variants) x 20 seeds, all defeated";
    return v;
}

// 3 -------------------------------------------------------------------------

Verdict tamper_evidence()
{
    Verdict v;
    auto net = simnet::spawn_network(7, 3, 99);
    auto members = net->members();
    std::mt19937_64 rng(99);
    while (net->ledger().height() + 1 < 10) {
        auto m = simnet::make_message(*net, 64);
        onion::transmit(*net, members[rng() % 3], members[3 + rng() % 4], m, 3);
    }
    auto chain = net->ledger().chain();
    chain.resize(10);
    if (!ledger::verify_chain(chain)) {
        v.fail("pristine chain does not verify");
        return v;
    }

    std::size_t mutations = 0;
    auto expect_invalid = [&](const std::vector<ledger::Block>& c, const std::string& what) {
        ++mutations;
        if (ledger::verify_chain(c))
            v.fail("undetected: " + what);
    };
    auto mutate_bytes = [&](auto& storage, const std::string& what, auto&& bytes_of) {
        auto& bytes = bytes_of(storage);
        for (std::size_t i = 0; i < bytes.size(); ++i) {
            auto saved = bytes[i];
            bytes[i] = static_cast<std::uint8_t>(saved ^ 0xA5);
            expect_invalid(chain, what + " byte " + std::to_string(i));
            bytes[i] = saved;
        }
    };

    for (std::size_t b = 0; b < chain.size(); ++b) {
        std::string at = "block " + std::to_string(b) + " ";
        auto& h = chain[b].header;
        mutate_bytes(h, at + "prev_hash", [](auto& x) -> auto& { return x.prev_hash.hash_bytes; });
        mutate_bytes(h, at + "merkle_root", [](auto& x) -> auto& { return x.merkle_root.hash_bytes; });
        mutate_bytes(h, at + "seal", [](auto& x) -> auto& { return x.seal.sig_bytes; });
        for (int bit = 0; bit < 64; bit += 8) {
            auto height = h.height;
            h.height ^= 0xA5ull << bit;
            expect_invalid(chain, at + "height");
            h.height = height;
            auto ts = h.timestamp_ms;
            h.timestamp_ms ^= static_cast<std::int64_t>(0xA5ull << bit);
            expect_invalid(chain, at + "timestamp");
            h.timestamp_ms = ts;
        }
        auto seq = h.sequencer;
        for (std::size_t i = 0; i < seq.str().size(); ++i) {
            std::string s = seq.str();
            s[i] = static_cast<char>(s[i] ^ 0x01);
            h.sequencer = PartyId(s);
            expect_invalid(chain, at + "sequencer");
        }
        h.sequencer = seq;

        for (std::size_t t = 0; t < chain[b].body.size(); ++t) {
            auto& tx = chain[b].body[t];
            std::string tt = at + "tx " + std::to_string(t);
            mutate_bytes(tx, tt + " payload", [](auto& x) -> auto& { return x.payload; });
            auto kind = tx.kind;
            for (std::uint8_t k = 1; k <= 6; ++k) {
                if (k == static_cast<std::uint8_t>(kind))
                    continue;
                tx.kind = static_cast<ledger::TxKind>(k);
                expect_invalid(chain, tt + " kind");
            }
            tx.kind = kind;
            auto sub = tx.submitter;
            for (std::size_t i = 0; i < sub.str().size(); ++i) {
                std::string s = sub.str();
                s[i] = static_cast<char>(s[i] ^ 0x01);
                tx.submitter = PartyId(s);
                expect_invalid(chain, tt + " submitter");
            }
            tx.submitter = sub;
        }
    }
    for (std::size_t i = 0; i < chain.size(); ++i) {
        for (std::size_t j = i + 1; j < chain.size(); ++j) {
            std::swap(chain[i], chain[j]);
            expect_invalid(chain, "order swap " + std::to_string(i) + "<->" + std::to_string(j));
            std::swap(chain[i], chain[j]);
        }
    }
    if (!ledger::verify_chain(chain))
        v.fail("restored chain no longer verifies");
    if (v.ok)
        v.detail = std::to_string(mutations) + " single-field mutations on a 10-block chain, all rejected";
    return v;
}

// 4 -------------------------------------------------------------------------

Verdict privacy_views()
{
    Verdict v;
    std::size_t checked = 0;
    for (std::size_t n : {3u, 4u, 5u, 10u}) {
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            auto net = simnet::spawn_network(n + 4, 3, seed * 31 + n);
            simnet::ScenarioConfig cfg;
            cfg.relays = n;
            cfg.disclose = false;
            auto o = simnet::run_scenario(*net, cfg);
            const auto& c = o.receipt->circuit;
            for (std::size_t k = 0; k < n; ++k) {
                std::set<PartyId> allowed{c.predecessor(k), c.successor(k)};
                bool middle = k > 0 && k + 1 < n;
                for (const auto& ev : net->participant(c.relays[k]).view()) {
                    for (const auto& p : ev.peers) {
                        ++checked;
                        if (!allowed.contains(p))
                            v.fail(c.relays[k].str() + " (" + ev.action + ") saw " + p.str());
                        if (middle && (p == c.transmitter || p == c.receiver))
                            v.fail("middle relay " + c.relays[k].str() + " saw an endpoint");
                    }
                }
            }
        }
    }
    if (v.ok)
        v.detail = std::to_string(checked) + " identifier references across 40 honest runs, all adjacent-only";
    return v;
}

// 5 & 6 ---------------------------------------------------------------------

std::string csv(const std::vector<cli::BenchRecord>& rows)
{
    std::ostringstream ss;
    cli::write_csv(ss, rows);
    return ss.str();
}

Verdict performance()
{
    Verdict v;
    cli::BenchOptions opt;
    opt.reps = 30;
    auto small = cli::bench_relays({3}, opt);
    opt.reps = 10;
    auto large = cli::bench_relays({30}, opt);
    std::vector<cli::BenchRecord> all = small;
    all.insert(all.end(), large.begin(), large.end());
    std::cout << csv(all);

    constexpr double kBound3 = 10 * 17'996.0;
    constexpr double kBound30 = 10 * 200'000.0;
    if (small[0].mean_us > kBound3)
        v.fail("n=3 transmit mean " + std::to_string(small[0].mean_us) + " us");
    if (large[0].mean_us > kBound30)
        v.fail("n=30 transmit mean " + std::to_string(large[0].mean_us) + " us");
    if (small[1].mean_us > small[0].mean_us)
        v.fail("n=3 disclosure slower than transmit");
    if (large[1].mean_us > large[0].mean_us)
        v.fail("n=30 disclosure slower than transmit");
    for (const auto& r : all)
        if (!r.verdicts_correct)
            v.fail("a benchmark disclosure missed the transmitter");
    char buf[200];
    std::snprintf(buf, sizeof buf, "n=3 transmit %.0f us (bound %.0f), n=30 transmit %.0f us (bound %.0f)",
                  small[0].mean_us, kBound3, large[0].mean_us, kBound30);
    if (v.ok)
        v.detail = buf;
    return v;
}

Verdict payload_scaling()
{
    Verdict v;
    cli::BenchOptions opt;
    opt.reps = 3;
    std::vector<cli::BenchRecord> rows;
    try {
        rows = cli::bench_payload({128, 10'000'000}, 3, opt);
    } catch (const Error& e) {
        v.fail(std::string("protocol failure: ") + e.what());
        return v;
    }
    std::cout << csv(rows);
    if (rows[0].evidence_per_message != rows[2].evidence_per_message || rows[0].evidence_per_message != 4)
        v.fail("evidence count changed with payload size");
    if (rows[1].evidence_per_message != rows[3].evidence_per_message)
        v.fail("plea count changed with payload size");
    if (!rows[1].verdicts_correct || !rows[3].verdicts_correct)
        v.fail("disclosure missed the transmitter");
    char buf[160];
    std::snprintf(buf, sizeof buf, "transmit 128 bit %.0f us -> 10 Mbit %.0f us (x%.1f), evidence 4 per message",
                  rows[0].mean_us, rows[2].mean_us, rows[2].mean_us / rows[0].mean_us);
    if (v.ok)
        v.detail = buf;
    return v;
}

// 7 -------------------------------------------------------------------------

Verdict round_trips()
{
    Verdict v;
    constexpr int kCases = 10'000;
    std::mt19937_64 rng(7);
    int failures = 0;
    auto check = [&](bool ok, const char* what) {
        if (!ok) {
            ++failures;
            v.fail(what);
        }
    };

    for (int i = 0; i < kCases; ++i) {
        auto k = random_key(rng);
        auto pt = random_bytes(rng, random_size(rng, 4096));
        auto ct = crypto::sym_encrypt(k, pt);
        check(crypto::try_sym_decrypt(k, ct) == pt, "decrypt(encrypt(x)) != x");
        ct[rng() % ct.size()] ^= 0x10;
        check(!crypto::try_sym_decrypt(k, ct), "tampered ciphertext accepted");
    }
    for (int i = 0; i < kCases; ++i) {
        auto kp = crypto::generate_keypair(rng());
        auto msg = random_bytes(rng, random_size(rng, 1024));
        auto sig = crypto::sign(kp.secret_key, msg);
        check(crypto::verify(kp.public_key, sig, msg), "valid signature rejected");
        auto other = msg;
        other.push_back(1);
        check(!crypto::verify(kp.public_key, sig, other), "signature verified for another message");
    }
    for (int i = 0; i < kCases; ++i) {
        std::size_t n = 3 + rng() % 8;
        auto c = random_circuit(rng, n);
        auto m = random_message(rng);
        Bytes packet = onion::build_onion(c, m);
        bool ok = true;
        for (std::size_t k = 0; k < n && ok; ++k) {
            auto layer = onion::peel_layer(c.hop_keys[k], packet);
            ok = layer.directive.from == c.relays[k] && layer.directive.to == c.successor(k) &&
                 layer.final == (k + 1 == n);
            packet = std::move(layer.inner);
        }
        check(ok && onion::Message::decode(packet) == m, "onion peel mismatch");
    }
    for (int i = 0; i < kCases; ++i) {
        auto tx = random_transaction(rng);
        auto enc = tx.canonical();
        auto back = ledger::Transaction::decode(enc);
        check(back == tx && back.canonical() == enc && back.handle() == tx.handle(), "transaction codec");

        onion::EvidenceRecord rec{static_cast<std::uint32_t>(rng()), random_bytes(rng, random_size(rng, 256)),
                                  rng() % 2 ? std::optional(random_digest(rng)) : std::nullopt};
        check(onion::EvidenceRecord::decode(rec.canonical()).canonical() == rec.canonical(), "evidence codec");

        auto m = random_message(rng);
        check(onion::Message::decode(m.canonical()) == m, "message codec");

        ledger::BlockHeader h{random_digest(rng), random_digest(rng), rng(), static_cast<std::int64_t>(rng()),
                              random_party(rng), {random_bytes(rng, 64)}};
        check(ledger::BlockHeader::decode(h.canonical()) == h, "header codec");
    }
    v.detail = std::to_string(4 * kCases) + " cases (encrypt/decrypt, sign/verify, onion, codecs), " +
               std::to_string(failures) + " failures";
    return v;
}

}  // namespace

int main()
{
    const std::vector<std::pair<std::string, Criterion>> criteria{
        {"1 honest-run traceability", honest_traceability},
        {"2 attack matrix", attack_matrix},
        {"3 ledger tamper-evidence", tamper_evidence},
        {"4 privacy views", privacy_views},
        {"5 performance sanity", performance},
        {"6 payload scaling", payload_scaling},
        {"7 crypto/serialization round trips", round_trips},
    };
    int failed = 0;
    for (const auto& [name, run] : criteria) {
        auto start = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = run();
        } catch (const std::exception& e) {
            v.fail(std::string("exception: ") + e.what());
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        char t[32];
        std::snprintf(t, sizeof t, "%.1fs", secs);
        std::cout << (v.ok ? "PASS" : "FAIL") << " criterion " << name << " [" << t << "]: " << v.detail
                  << std::endl;
        failed += v.ok ? 0 : 1;
    }
    return failed == 0 ? 0 : 1;
}
