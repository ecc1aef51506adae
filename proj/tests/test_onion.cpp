#include "onionchain/onion.hpp"
#include "support.hpp"

#include <set>

using namespace onionchain;
using namespace onionchain::onion;
using namespace onionchain::testing;

namespace {

std::vector<PartyId> ids(std::initializer_list<const char*> names)
{
    std::vector<PartyId> out;
    for (auto n : names)
        out.emplace_back(n);
    return out;
}

Circuit fixed_circuit(std::mt19937_64& rng, std::size_t n)
{
    Circuit c;
    c.transmitter = PartyId("T");
    c.receiver = PartyId("R");
    for (std::size_t k = 0; k < n; ++k) {
        c.relays.emplace_back("r" + std::to_string(k));
        c.hop_keys.push_back(random_key(rng));
    }
    return c;
}

}  // namespace

TEST(SelectRelays, Errors)
{
    std::mt19937_64 rng(1);
    auto members = ids({"T", "R", "a", "b", "c"});
    EXPECT_ERRC(select_relays(members, PartyId("T"), PartyId("R"), 2, rng), NTooSmall);
    EXPECT_ERRC(select_relays(members, PartyId("T"), PartyId("R"), 4, rng), InsufficientNodes);
}

TEST(SelectRelays, DistinctAndExcludesEndpoints)
{
    std::mt19937_64 rng(2);
    auto members = ids({"T", "R", "a", "b", "c", "d", "e", "f"});
    std::set<PartyId> first_seen;
    for (int trial = 0; trial < 200; ++trial) {
        auto c = select_relays(members, PartyId("T"), PartyId("R"), 3, rng);
        std::set<PartyId> uniq(c.relays.begin(), c.relays.end());
        ASSERT_EQ(uniq.size(), 3u);
        EXPECT_FALSE(uniq.contains(PartyId("T")));
        EXPECT_FALSE(uniq.contains(PartyId("R")));
        first_seen.insert(c.relays[0]);
    }
    EXPECT_EQ(first_seen.size(), 6u);
}

TEST(OnionLayers, EachRelaySeesOnlyItsDirective)
{
    std::mt19937_64 rng(3);
    auto c = fixed_circuit(rng, 4);
    Message m{ascii("hello"), 42};
    Bytes packet = build_onion(c, m);
    for (std::size_t k = 0; k < 4; ++k) {
        if (k + 1 < 4)
            EXPECT_ERRC(peel_layer(c.hop_keys[k + 1], packet), AuthenticationFailure);
        auto layer = peel_layer(c.hop_keys[k], packet);
        EXPECT_EQ(layer.directive.from, c.relays[k]);
        EXPECT_EQ(layer.directive.to, c.successor(k));
        EXPECT_EQ(layer.final, k == 3);
        packet = layer.inner;
    }
    EXPECT_EQ(Message::decode(packet), m);
}

TEST(OnionLayers, BuildRequiresKeysAndRelays)
{
    std::mt19937_64 rng(4);
    auto c = fixed_circuit(rng, 3);
    c.hop_keys.pop_back();
    EXPECT_ERRC(build_onion(c, {}), InvalidArgument);
    auto short_c = fixed_circuit(rng, 2);
    EXPECT_ERRC(build_onion(short_c, {}), NTooSmall);
}

TEST(OnionLayers, DirectiveToSelfIsMalformed)
{
    std::mt19937_64 rng(5);
    auto k = random_key(rng);
    auto sealed = seal_layer(k, {PartyId("a"), PartyId("a")}, false, ascii("x"));
    EXPECT_ERRC(peel_layer(k, sealed), MalformedInput);
}

TEST(Freshness, WindowAndSkewBoundaries)
{
    const std::int64_t now = 1'000'000;
    EXPECT_TRUE(check_freshness({{}, now - kFreshnessWindowMs}, kFreshnessWindowMs, now));
    EXPECT_FALSE(check_freshness({{}, now - kFreshnessWindowMs - 1}, kFreshnessWindowMs, now));
    EXPECT_TRUE(check_freshness({{}, now + kClockSkewMs}, kFreshnessWindowMs, now));
    EXPECT_FALSE(check_freshness({{}, now + kClockSkewMs + 1}, kFreshnessWindowMs, now));
}

TEST(Codecs, RoundTrips)
{
    Message m{ascii("abc"), -5};
    EXPECT_EQ(Message::decode(m.canonical()), m);

    LinkedContent lc{LinkedContent::Kind::Packet, ascii("v"), ascii("prev")};
    EXPECT_EQ(LinkedContent::decode(lc.canonical()), lc);
    LinkedContent first{LinkedContent::Kind::Onion, ascii("v"), std::nullopt};
    EXPECT_EQ(LinkedContent::decode(first.canonical()), first);

    EvidenceRecord rec{3, ascii("ct"), crypto::digest(ascii("p"))};
    EXPECT_EQ(EvidenceRecord::decode(rec.canonical()), rec);
    EvidenceRecord ev1{1, ascii("ct"), std::nullopt};
    EXPECT_EQ(EvidenceRecord::decode(ev1.canonical()), ev1);

    auto kp = crypto::generate_keypair(1);
    SignedEnvelope env{kp.public_key, ascii("body"), crypto::sign(kp.secret_key, ascii("body"))};
    EXPECT_TRUE(env.valid());
    EXPECT_EQ(SignedEnvelope::decode(env.canonical()), env);
    env.body = ascii("bodz");
    EXPECT_FALSE(env.valid());
}

class TransmitTest : public ::testing::Test {
protected:
    std::unique_ptr<simnet::Network> net = simnet::spawn_network(8, 2, 77);
    PartyId t{"node-3"}, r{"node-6"};
};

TEST_F(TransmitTest, EvidenceChainStructure)
{
    auto m = simnet::make_message(*net, 128);
    auto receipt = transmit(*net, t, r, m, 4);
    ASSERT_EQ(receipt.evidence.size(), 5u);

    std::vector<PartyId> path = receipt.circuit.relays;
    path.push_back(r);
    std::optional<Digest> prev;
    Bytes prev_payload;
    for (std::size_t i = 0; i < receipt.evidence.size(); ++i) {
        const auto& h = receipt.evidence[i];
        auto tx = net->ledger().get_transaction(h);
        EXPECT_EQ(tx.kind, ledger::TxKind::Evidence);
        EXPECT_EQ(tx.submitter, path[i]);
        auto rec = EvidenceRecord::decode(tx.payload);
        EXPECT_EQ(rec.index, i + 1);
        EXPECT_EQ(rec.prev_handle, prev);

        auto key = net->participant(path[i]).proof_key(h);
        ASSERT_TRUE(key);
        const PartyId& inner_party = i == 0 ? t : path[i - 1];
        EXPECT_EQ(net->participant(inner_party).proof_key(h), key);
        auto opened = open_evidence(*key, rec);
        EXPECT_EQ(opened.outer.signer, net->participant(path[i]).public_key());
        EXPECT_EQ(opened.inner.signer, net->participant(inner_party).public_key());
        EXPECT_TRUE(opened.outer.valid());
        EXPECT_TRUE(opened.inner.valid());
        auto kind = i == 0 ? LinkedContent::Kind::Onion
                           : (i + 1 == receipt.evidence.size() ? LinkedContent::Kind::Message
                                                               : LinkedContent::Kind::Packet);
        EXPECT_EQ(opened.content.kind, kind);
        if (i == 0)
            EXPECT_FALSE(opened.content.prev);
        else
            EXPECT_EQ(opened.content.prev, prev_payload);
        prev = h;
        prev_payload = tx.payload;
    }

    auto got = net->participant(r).deliveries();
    ASSERT_EQ(got.size(), 1u);
    EXPECT_EQ(got[0].message, m);
    EXPECT_EQ(got[0].terminal_evidence, receipt.evidence.back());
}

TEST_F(TransmitTest, FirstRelayRefusesMismatchedSignature)
{
    auto c = establish_circuit(*net, t, r, 3);
    auto m = simnet::make_message(*net, 64);
    Bytes onion_bytes = build_onion(c, m);
    auto h = prepare_handoff(net->participant(t), {LinkedContent::Kind::Onion, ascii("other"), {}}, std::nullopt,
                             c.session);
    auto before = simnet::count_evidence(net->ledger());
    EXPECT_ERRC(make_evidence_initial(*net, t, c.relays[0], onion_bytes, h), BadTransmitterSignature);
    EXPECT_EQ(simnet::count_evidence(net->ledger()), before);
}

TEST_F(TransmitTest, HopRequiresCommittedPrevious)
{
    auto c = establish_circuit(*net, t, r, 3);
    auto h = prepare_handoff(net->participant(c.relays[0]), {LinkedContent::Kind::Packet, ascii("v"), ascii("p")},
                             crypto::digest(ascii("nothing")), c.session);
    EXPECT_ERRC(make_evidence_hop(*net, c.relays[0], c.relays[1], ascii("v"), h, 2), PrevEvidenceNotCommitted);
}

TEST_F(TransmitTest, ReceiverDiscardsStaleMessage)
{
    auto m = simnet::make_message(*net, 64);
    net->advance_clock(kFreshnessWindowMs + 1);
    auto before = simnet::count_evidence(net->ledger());
    EXPECT_ERRC(transmit(*net, t, r, m, 3), StaleMessage);
    // EV_1..EV_n are already on the ledger; EV_{n+1} never is.
    EXPECT_EQ(simnet::count_evidence(net->ledger()), before + 3);
    EXPECT_TRUE(net->participant(r).deliveries().empty());
}

TEST_F(TransmitTest, TooFewEligibleRelays)
{
    auto m = simnet::make_message(*net, 64);
    EXPECT_ERRC(transmit(*net, t, r, m, 7), InsufficientNodes);
    EXPECT_ERRC(transmit(*net, t, r, m, 2), NTooSmall);
}
