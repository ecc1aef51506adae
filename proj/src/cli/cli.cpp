#include "onionchain/cli.hpp"

#include "onionchain/error.hpp"
#include "onionchain/registry.hpp"
#include "onionchain/simnet.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace onionchain::cli {

namespace fs = std::filesystem;
using nlohmann::json;
using crypto::Digest;

namespace {

int exit_code_for(Errc code)
{
    switch (family_of(code)) {
    case ErrorFamily::Crypto: return 3;
    case ErrorFamily::Ledger: return 4;
    case ErrorFamily::Registry: return 5;
    case ErrorFamily::Onion: return 6;
    case ErrorFamily::Disclosure: return 7;
    case ErrorFamily::Simnet: return 8;
    case ErrorFamily::Usage: return kExitUsage;
    }
    return kExitFailure;
}

int exit_code_for(const disclosure::Culprit& c)
{
    switch (c.reason) {
    case disclosure::CulpritReason::TransmitterOrigin: return kExitOk;
    case disclosure::CulpritReason::RefusedPlea: return kExitRefusedPlea;
    case disclosure::CulpritReason::ForgedEvidence: return kExitForgedEvidence;
    case disclosure::CulpritReason::CalumniatingReceiver: return kExitCalumniating;
    }
    return kExitFailure;
}

// ONIONCHAIN_LOG=info prints milestones, =trace prints every event.
void attach_log(simnet::Network& net, std::ostream& err)
{
    const char* env = std::getenv("ONIONCHAIN_LOG");
    std::string level = env ? env : "";
    if (level != "info" && level != "trace")
        return;
    bool all = level == "trace";
    net.set_trace_sink([&err, all](const simnet::TraceEvent& ev) {
        static const std::set<std::string> milestones{"commit", "verdict", "fault", "discard", "refuse"};
        if (!all && !milestones.contains(ev.kind))
            return;
        err << "[" << ev.seq << "] t=" << ev.time_ms << ' ' << ev.kind;
        for (const auto& p : ev.parties)
            err << ' ' << p.str();
        if (ev.hop)
            err << (ev.kind == "commit" ? " height=" : " hop=") << ev.hop;
        if (!ev.detail.empty())
            err << " : " << ev.detail;
        err << '\n';
    });
}

// ---------------------------------------------------------------------------
// Persistent state: the network parameters plus every operation applied to
// it. The simulator is deterministic, so replaying the log rebuilds the
// exact ledger.

struct State {
    std::size_t nodes = 10;
    std::size_t miners = 3;
    std::uint64_t seed = 1;
    json ops = json::array();
};

struct Session {
    fs::path dir;
    State state;
    std::unique_ptr<simnet::Network> net;
};

int apply(simnet::Network& net, const json& op, std::ostream& out);

Session open_session(const fs::path& dir, const State& defaults)
{
    Session s{dir, defaults, nullptr};
    fs::path file = dir / "state.json";
    if (fs::exists(file)) {
        std::ifstream in(file);
        json j;
        try {
            j = json::parse(in);
            s.state.nodes = j.at("nodes").get<std::size_t>();
            s.state.miners = j.at("miners").get<std::size_t>();
            s.state.seed = j.at("seed").get<std::uint64_t>();
            s.state.ops = j.at("ops");
        } catch (const json::exception& e) {
            throw Error(Errc::MalformedInput, file.string() + ": " + e.what());
        }
    }
    s.net = simnet::spawn_network(s.state.nodes, s.state.miners, s.state.seed);
    std::ostringstream sink;
    for (const auto& op : s.state.ops) {
        try {
            apply(*s.net, op, sink);
        } catch (const Error&) {
            // Failed operations are logged too; they fail identically on replay.
        }
    }
    return s;
}

void save_session(const Session& s)
{
    fs::create_directories(s.dir);
    json j{{"nodes", s.state.nodes}, {"miners", s.state.miners}, {"seed", s.state.seed}, {"ops", s.state.ops}};
    std::ofstream(s.dir / "state.json") << j.dump(2) << '\n';
    std::ofstream chain(s.dir / "chain.log");
    s.net->ledger().with_chain([&](std::span<const ledger::Block> blocks) { ledger::write_chain(chain, blocks); });
}

// Runs `op` against the live session, then records it whatever the outcome.
int execute(Session& s, const json& op, std::ostream& out, std::ostream& err)
{
    attach_log(*s.net, err);
    int code = kExitOk;
    std::optional<Error> failure;
    try {
        code = apply(*s.net, op, out);
    } catch (const Error& e) {
        failure = e;
    }
    s.state.ops.push_back(op);
    save_session(s);
    if (failure) {
        err << "error: " << to_string(failure->code()) << ": " << failure->what() << '\n';
        return exit_code_for(failure->code());
    }
    return code;
}

std::uint64_t key_seed_for(const std::string& id)
{
    auto d = crypto::digest(ByteView(reinterpret_cast<const std::uint8_t*>(id.data()), id.size()));
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
        v = (v << 8) | d.hash_bytes[static_cast<std::size_t>(i)];
    return v;
}

int apply_register(simnet::Network& net, const json& op, std::ostream& out)
{
    const std::string id = op.at("id");
    std::uint64_t seed = op.contains("seed") ? op.at("seed").get<std::uint64_t>() : key_seed_for(id);
    auto keys = crypto::generate_keypair(seed);
    PartyId party(id);
    if (!net.has_node(party))
        net.add_node(std::make_unique<simnet::Node>(party, keys, false));
    auto& node = net.participant(party);
    auto req = registry::build_registration_request(id, node.keys());

    auto verdict = registry::validate_registration(req, net.ledger());
    if (auto* no = std::get_if<registry::Rejected>(&verdict)) {
        out << "rejected " << registry::to_string(no->reason) << '\n';
        return 5;
    }
    auto& ok = std::get<registry::Accepted>(verdict);
    if (ok.duplicate_identity)
        out << "warning: identity " << id << " is already registered under another key\n";
    net.commit_round();
    if (!net.ledger().is_committed(ok.handle)) {
        for (const auto& r : net.ledger().rejected())
            if (r.handle == ok.handle)
                out << "rejected " << ledger::to_string(r.reason) << '\n';
        return 5;
    }
    out << ok.handle.hex() << '\n';
    return kExitOk;
}

int apply_send(simnet::Network& net, const json& op, std::ostream& out)
{
    PartyId from(op.at("from").get<std::string>());
    PartyId to(op.at("to").get<std::string>());
    for (const auto& p : {from, to})
        if (!net.ledger().member(p))
            throw Error(Errc::NotRegistered, p.str());
    auto m = simnet::make_message(net, op.at("payload_bits").get<std::size_t>());
    auto receipt = onion::transmit(net, from, to, m, op.at("relays").get<std::size_t>());
    for (std::size_t i = 0; i < receipt.evidence.size(); ++i)
        out << "EV" << i + 1 << ' ' << receipt.evidence[i].hex() << '\n';
    out << "message " << receipt.message_digest.hex() << '\n';
    return kExitOk;
}

int apply_disclose(simnet::Network& net, const json& op, std::ostream& out)
{
    PartyId receiver(op.at("receiver").get<std::string>());
    Digest terminal = Digest::from_hex(op.at("evidence").get<std::string>());
    std::optional<Digest> accused;
    if (op.contains("accuse"))
        accused = Digest::from_hex(op.at("accuse").get<std::string>());
    for (const auto& d : net.participant(receiver).deliveries())
        if (!accused && d.terminal_evidence == terminal)
            accused = d.message.digest();
    if (!accused)
        throw Error(Errc::EvidenceNotFound, receiver.str() + " received nothing under that evidence");

    auto run = simnet::disclose(net, receiver, *accused, terminal);
    for (const auto& p : run.outcome.transcript) {
        out << "plea EV" << p.index << ' ' << p.pleader.str() << ' ' << disclosure::to_string(p.verdict);
        if (!p.blamed.empty())
            out << " blamed=" << p.blamed.str();
        if (!p.detail.empty())
            out << " (" << p.detail << ')';
        out << '\n';
    }
    if (run.confession_failed)
        out << "confession did not open the onion\n";
    out << "culprit " << run.culprit.party.str() << ' ' << disclosure::to_string(run.culprit.reason) << '\n';
    return exit_code_for(run.culprit);
}

int apply(simnet::Network& net, const json& op, std::ostream& out)
{
    const std::string verb = op.at("op");
    if (verb == "register")
        return apply_register(net, op, out);
    if (verb == "send")
        return apply_send(net, op, out);
    if (verb == "disclose")
        return apply_disclose(net, op, out);
    throw Error(Errc::MalformedInput, "unknown operation " + verb);
}

// ---------------------------------------------------------------------------

struct AttackArgs {
    std::string kind;
    std::size_t nodes = 10;
    std::size_t relays = 3;
    std::uint64_t seed = 1;
    std::size_t payload_bits = 128;
    std::string variant = "forged-evidence";
    bool refuse_plea = false;
    bool garbage_confession = false;
    std::string trace_file;
};

int run_attack(const AttackArgs& a, std::ostream& out, std::ostream& err)
{
    auto kind = simnet::parse_scenario(a.kind);
    if (!kind) {
        err << "unknown attack kind: " << a.kind << '\n';
        return kExitUsage;
    }
    simnet::ScenarioConfig cfg;
    cfg.kind = *kind;
    cfg.relays = a.relays;
    cfg.payload_bits = a.payload_bits;
    cfg.messenger = a.variant == "forged-packet" ? simnet::MessengerVariant::ForgedPacket
                                                 : simnet::MessengerVariant::ForgedEvidence;
    cfg.adversary_refuses_plea = a.refuse_plea;
    cfg.garbage_confession = a.garbage_confession;

    auto net = simnet::spawn_network(a.nodes, std::min<std::size_t>(3, a.nodes), a.seed);
    attach_log(*net, err);
    std::optional<Error> failure;
    simnet::ScenarioOutcome o;
    try {
        o = simnet::run_scenario(*net, cfg);
    } catch (const Error& e) {
        failure = e;
    }
    if (!a.trace_file.empty()) {
        std::ofstream tf(a.trace_file);
        net->export_trace(tf);
    }
    if (failure) {
        err << "error: " << to_string(failure->code()) << ": " << failure->what() << '\n';
        return exit_code_for(failure->code());
    }

    out << "scenario " << simnet::to_string(o.kind) << '\n';
    out << "transmitter " << o.transmitter.str() << '\n';
    out << "receiver " << o.receiver.str() << '\n';
    out << "relays";
    for (const auto& r : o.relays)
        out << ' ' << r.str();
    out << "\nadversaries";
    for (const auto& r : o.adversaries)
        out << ' ' << r.str();
    out << '\n';
    for (const auto& r : o.refusals)
        out << "refused " << r << '\n';

    bool defeated;
    if (o.kind == simnet::ScenarioKind::Replay) {
        out << "discarded " << (o.discarded ? "yes" : "no") << '\n';
        out << "evidence " << o.evidence_before_replay << " -> " << o.evidence_after_replay << '\n';
        defeated = o.discarded && o.evidence_before_replay == o.evidence_after_replay;
    } else {
        if (o.culprit)
            out << "culprit " << o.culprit->party.str() << ' ' << disclosure::to_string(o.culprit->reason) << '\n';
        defeated = o.culprit && o.adversaries.contains(o.culprit->party);
    }
    out << (defeated ? "attack defeated" : "attack NOT defeated") << '\n';
    return defeated ? kExitOk : kExitFailure;
}

int run_bench(bool payload_sweep, const std::vector<std::size_t>& list, std::size_t relays, const BenchOptions& opt,
              const std::string& out_file, std::ostream& out)
{
    auto rows = payload_sweep ? bench_payload(list, relays, opt) : bench_relays(list, opt);
    if (out_file.empty()) {
        write_csv(out, rows);
    } else {
        std::ofstream f(out_file);
        if (!f)
            throw Error(Errc::InvalidArgument, "cannot write " + out_file);
        write_csv(f, rows);
    }
    return kExitOk;
}

int run_verify(const std::string& file, std::ostream& out, std::ostream& err)
{
    std::ifstream in(file);
    if (!in) {
        err << "cannot open " << file << '\n';
        return kExitFailure;
    }
    try {
        auto chain = ledger::read_chain(in);
        bool ok = ledger::verify_chain(chain);
        out << (ok ? "valid" : "invalid") << ' ' << chain.size() << " blocks\n";
        return ok ? kExitOk : kExitFailure;
    } catch (const Error& e) {
        out << "invalid: " << e.what() << '\n';
        return kExitFailure;
    }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Onionchain: accountable onion routing over a permissioned ledger", "onionchain"};
    app.require_subcommand(1);

    std::string state_dir = ".onionchain";
    State defaults;
    app.add_option("--state", state_dir, "State directory")->capture_default_str();
    app.add_option("--nodes", defaults.nodes, "Network size when the state is created")->capture_default_str();
    app.add_option("--miners", defaults.miners, "Miner count when the state is created")->capture_default_str();
    app.add_option("--network-seed", defaults.seed, "Simulator seed when the state is created")
        ->capture_default_str();

    auto* reg = app.add_subcommand("register", "Register an identity and print the committed handle");
    std::string reg_id;
    std::optional<std::uint64_t> reg_seed;
    reg->add_option("--id", reg_id, "Identity string")->required();
    reg->add_option("--seed", reg_seed, "Key seed (default: derived from the identity)");

    auto* send = app.add_subcommand("send", "Transmit a random message and print the evidence handles");
    std::string from, to;
    std::size_t relays = 3, bits = 128;
    send->add_option("--from", from)->required();
    send->add_option("--to", to)->required();
    send->add_option("--relays", relays)->capture_default_str();
    send->add_option("--payload-bits", bits)->capture_default_str();

    auto* disc = app.add_subcommand("disclose", "Run identity disclosure from a received message");
    std::string receiver, evidence, accuse;
    disc->add_option("--receiver", receiver)->required();
    disc->add_option("--evidence", evidence, "Terminal evidence handle")->required();
    disc->add_option("--accuse", accuse, "Digest of the accused message (default: the one received)");

    auto* attack = app.add_subcommand("attack", "Run a scripted attack scenario on a fresh network");
    AttackArgs aa;
    attack->add_option("kind", aa.kind, "honest|malicious-transmitter|malicious-messenger|replay|calumniating|collusion")
        ->required();
    attack->add_option("--nodes", aa.nodes)->capture_default_str();
    attack->add_option("--relays", aa.relays)->capture_default_str();
    attack->add_option("--seed", aa.seed)->capture_default_str();
    attack->add_option("--payload-bits", aa.payload_bits)->capture_default_str();
    attack->add_option("--variant", aa.variant, "Messenger attack: forged-evidence|forged-packet")
        ->check(CLI::IsMember({"forged-evidence", "forged-packet"}))
        ->capture_default_str();
    attack->add_flag("--refuse-plea", aa.refuse_plea, "Adversary withholds its proof key");
    attack->add_flag("--garbage-confession", aa.garbage_confession, "Transmitter releases wrong hop keys");
    attack->add_option("--trace", aa.trace_file, "Write the event trace as JSON lines");

    auto* bench = app.add_subcommand("bench", "Timing sweeps, CSV output");
    bench->require_subcommand(1);
    BenchOptions bo;
    std::string bench_out;
    std::vector<std::size_t> relay_list{3, 5, 10};
    std::vector<std::size_t> size_list{128, 10'000'000};
    std::size_t payload_relays = 3;
    auto common = [&](CLI::App* sc) {
        sc->add_option("--reps", bo.reps)->capture_default_str()->check(CLI::PositiveNumber);
        sc->add_option("--seed", bo.seed)->capture_default_str();
        sc->add_option("--out", bench_out, "CSV file (default: stdout)");
        sc->add_flag("--include-cold", bo.include_cold, "Keep the first run instead of discarding it");
    };
    auto* br = bench->add_subcommand("relays", "Sweep the relay count");
    br->add_option("--relays", relay_list)->delimiter(',')->capture_default_str();
    br->add_option("--payload-bits", bo.payload_bits)->capture_default_str();
    common(br);
    auto* bp = bench->add_subcommand("payload", "Sweep the payload size");
    bp->add_option("--sizes", size_list, "Payload sizes in bits")->delimiter(',')->capture_default_str();
    bp->add_option("--relays", payload_relays)->capture_default_str();
    common(bp);

    auto* led = app.add_subcommand("ledger", "Ledger utilities");
    led->require_subcommand(1);
    auto* verify = led->add_subcommand("verify", "Check a chain file; exit 0 if valid");
    std::string chain_file;
    verify->add_option("file", chain_file)->required();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kExitUsage;
    }

    try {
        if (*attack)
            return run_attack(aa, out, err);
        if (*br)
            return run_bench(false, relay_list, 0, bo, bench_out, out);
        if (*bp)
            return run_bench(true, size_list, payload_relays, bo, bench_out, out);
        if (*verify)
            return run_verify(chain_file, out, err);

        json op;
        if (*reg) {
            op = {{"op", "register"}, {"id", reg_id}};
            if (reg_seed)
                op["seed"] = *reg_seed;
        } else if (*send) {
            op = {{"op", "send"}, {"from", from}, {"to", to}, {"relays", relays}, {"payload_bits", bits}};
        } else {
            op = {{"op", "disclose"}, {"receiver", receiver}, {"evidence", evidence}};
            if (!accuse.empty())
                op["accuse"] = accuse;
        }
        Session s = open_session(state_dir, defaults);
        return execute(s, op, out, err);
    } catch (const Error& e) {
        err << "error: " << to_string(e.code()) << ": " << e.what() << '\n';
        return exit_code_for(e.code());
    }
}

}  // namespace onionchain::cli
