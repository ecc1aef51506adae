#include "onionchain/disclosure.hpp"
#include "onionchain/registry.hpp"
#include "support.hpp"

using namespace onionchain;
using namespace onionchain::disclosure;
using namespace onionchain::testing;

namespace {

class DisclosureTest : public ::testing::Test {
protected:
    std::unique_ptr<simnet::Network> net = simnet::spawn_network(9, 3, 5);
    PartyId t{"node-4"}, r{"node-8"};
    onion::Message m;
    onion::TransmitReceipt receipt;

    void SetUp() override
    {
        m = simnet::make_message(*net, 128);
        receipt = onion::transmit(*net, t, r, m, 3);
    }

    Digest open_request(const Digest& accused)
    {
        auto key = *net->participant(r).proof_key(receipt.evidence.back());
        return request_disclosure(*net, r, accused, receipt.evidence.back(), key);
    }

    void vote(const std::vector<std::string>& voters, bool approve, const Digest& req)
    {
        for (const auto& v : voters)
            cast_vote(*net, PartyId(v), req, approve);
        net->commit_round();
    }
};

std::vector<std::string> nodes(int from, int to)
{
    std::vector<std::string> out;
    for (int i = from; i < to; ++i)
        out.push_back("node-" + std::to_string(i));
    return out;
}

}  // namespace

TEST_F(DisclosureTest, HonestWalkReachesTransmitter)
{
    auto req = open_request(m.digest());
    vote(nodes(0, 9), true, req);
    auto out = run_disclosure(*net, req, *net);

    EXPECT_EQ(out.culprit, (Culprit{t, CulpritReason::TransmitterOrigin}));
    ASSERT_EQ(out.transcript.size(), 4u);
    std::vector<PartyId> expected{r, receipt.circuit.relays[2], receipt.circuit.relays[1], receipt.circuit.relays[0]};
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_EQ(out.transcript[i].pleader, expected[i]);
        EXPECT_EQ(out.transcript[i].verdict, PleaVerdict::Innocent);
        EXPECT_EQ(out.transcript[i].index, 4 - i);
        EXPECT_EQ(out.transcript[i].evidence, receipt.evidence[3 - i]);
    }
    EXPECT_EQ(out.transcript.back().previous_hop, t);
    ASSERT_EQ(out.plea_transactions.size(), 4u);
    for (const auto& h : out.plea_transactions)
        EXPECT_TRUE(net->ledger().is_committed(h));
    EXPECT_TRUE(audit(net->ledger(), req));

    auto conf = confession(net->ledger(), out, receipt.circuit.hop_keys);
    EXPECT_EQ(conf.recovered, m);
    EXPECT_EQ(conf.culprit, out.culprit);
}

TEST_F(DisclosureTest, RequestErrors)
{
    auto key = *net->participant(r).proof_key(receipt.evidence.back());
    EXPECT_ERRC(request_disclosure(*net, r, m.digest(), crypto::digest(ascii("none")), key), EvidenceNotFound);
    std::mt19937_64 rng(1);
    EXPECT_ERRC(request_disclosure(*net, r, m.digest(), receipt.evidence.back(), random_key(rng)),
                KeyDoesNotOpenEvidence);
    // A registration handle is not evidence.
    auto reg = net->ledger().block(1).handles().front();
    EXPECT_ERRC(request_disclosure(*net, r, m.digest(), reg, key), EvidenceNotFound);
}

TEST_F(DisclosureTest, NeedsStrictMajority)
{
    auto req = open_request(m.digest());
    EXPECT_ERRC(run_disclosure(*net, req, *net), NotApproved);

    vote(nodes(0, 4), true, req);
    auto t1 = tally(net->ledger(), req);
    EXPECT_EQ(t1.electorate, 9u);
    EXPECT_EQ(t1.approvals, 4u);
    EXPECT_FALSE(t1.approved);
    EXPECT_ERRC(run_disclosure(*net, req, *net), NotApproved);

    vote({"node-4"}, true, req);
    EXPECT_TRUE(tally(net->ledger(), req).approved);
}

TEST_F(DisclosureTest, TallyCountsEachVoterOnceInsideHorizon)
{
    auto req = open_request(m.digest());
    vote({"node-0", "node-1"}, false, req);
    vote({"node-0", "node-2"}, true, req);  // node-0 already voted
    auto t1 = tally(net->ledger(), req);
    EXPECT_EQ(t1.rejections, 2u);
    EXPECT_EQ(t1.approvals, 1u);
    EXPECT_FALSE(t1.closed);

    vote({"node-3"}, true, req);
    EXPECT_TRUE(tally(net->ledger(), req).closed);
    vote(nodes(4, 9), true, req);  // past the horizon
    auto t2 = tally(net->ledger(), req);
    EXPECT_EQ(t2.approvals, 2u);
    EXPECT_FALSE(t2.approved);
}

TEST_F(DisclosureTest, LateRegistrantCannotVote)
{
    auto req = open_request(m.digest());
    auto kp = crypto::generate_keypair(999);
    net->add_node(std::make_unique<simnet::Node>(PartyId("late"), kp, false));
    registry::validate_registration(registry::build_registration_request("late", kp), net->ledger());
    net->commit_round();
    vote({"late"}, true, req);
    EXPECT_EQ(tally(net->ledger(), req).approvals, 0u);
    EXPECT_EQ(tally(net->ledger(), req).electorate, 9u);
}

TEST_F(DisclosureTest, RefusalBlamesTheRefuser)
{
    auto req = open_request(m.digest());
    vote(nodes(0, 9), true, req);
    const PartyId b = receipt.circuit.relays[1];
    net->refuse_pleas(b);
    auto out = run_disclosure(*net, req, *net);
    EXPECT_EQ(out.culprit, (Culprit{b, CulpritReason::RefusedPlea}));
    EXPECT_EQ(out.transcript.back().verdict, PleaVerdict::CulpritNoKey);
    EXPECT_EQ(out.transcript.size(), 3u);
    EXPECT_TRUE(audit(net->ledger(), req));
}

TEST_F(DisclosureTest, PleaWithWrongKey)
{
    std::mt19937_64 rng(8);
    auto res = plea(net->ledger(), r, receipt.evidence.back(), random_key(rng, crypto::KeyPurpose::Proof), true);
    EXPECT_EQ(res.verdict, PleaVerdict::CulpritNoKey);
    EXPECT_EQ(res.blamed, r);
    auto none = plea(net->ledger(), r, receipt.evidence.back(), std::nullopt, true);
    EXPECT_EQ(none.verdict, PleaVerdict::CulpritNoKey);
    EXPECT_ERRC(plea(net->ledger(), r, crypto::digest(ascii("x")), std::nullopt, true), TraceBroken);
}

TEST_F(DisclosureTest, PleaByWrongPartyIsBadSignature)
{
    // The receiver's key opens EV_{n+1}, but relays[0] is not its outer signer.
    auto key = net->participant(r).proof_key(receipt.evidence.back());
    auto res = plea(net->ledger(), receipt.circuit.relays[0], receipt.evidence.back(), key, true);
    EXPECT_EQ(res.verdict, PleaVerdict::CulpritBadSignature);
}

TEST_F(DisclosureTest, ConfessionWithWrongKeys)
{
    auto req = open_request(m.digest());
    vote(nodes(0, 9), true, req);
    auto out = run_disclosure(*net, req, *net);
    std::mt19937_64 rng(9);
    std::vector<crypto::SymmetricKey> junk{random_key(rng), random_key(rng), random_key(rng)};
    EXPECT_ERRC(confession(net->ledger(), out, junk), KeysDoNotOpenOnion);
    EXPECT_ERRC(confession(net->ledger(), out, {receipt.circuit.hop_keys[0]}), KeysDoNotOpenOnion);
}

TEST_F(DisclosureTest, ConfessionExposesCalumny)
{
    auto req = open_request(crypto::digest(ascii("never sent")));
    vote(nodes(0, 9), true, req);
    auto out = run_disclosure(*net, req, *net);
    EXPECT_EQ(out.culprit.party, t);
    auto conf = confession(net->ledger(), out, receipt.circuit.hop_keys);
    EXPECT_EQ(conf.culprit, (Culprit{r, CulpritReason::CalumniatingReceiver}));
    EXPECT_EQ(conf.recovered, m);
}

TEST(DisclosureCodecs, RoundTrips)
{
    std::mt19937_64 rng(2);
    DisclosureRequest req{PartyId("r"), crypto::digest(ascii("m")), crypto::digest(ascii("e")),
                          random_key(rng, crypto::KeyPurpose::Proof)};
    auto back = DisclosureRequest::decode(req.canonical(), PartyId("r"));
    EXPECT_EQ(back.accused_message_digest, req.accused_message_digest);
    EXPECT_EQ(back.terminal_evidence, req.terminal_evidence);
    EXPECT_EQ(back.released_proof_key, req.released_proof_key);

    auto kp = crypto::generate_keypair(3);
    Vote v{PartyId("v"), crypto::digest(ascii("q")), true, crypto::sign(kp.secret_key, Vote::statement({}, true))};
    auto vb = Vote::decode(v.canonical(), PartyId("v"));
    EXPECT_EQ(vb.request, v.request);
    EXPECT_EQ(vb.approve, true);
    EXPECT_EQ(vb.signature, v.signature);
    EXPECT_NE(Vote::statement(v.request, true), Vote::statement(v.request, false));

    PleaRecord p{crypto::digest(ascii("q")), crypto::digest(ascii("e")), PartyId("x"), std::nullopt,
                 PleaVerdict::CulpritNoKey};
    auto pb = PleaRecord::decode(p.canonical());
    EXPECT_EQ(pb.pleader, p.pleader);
    EXPECT_FALSE(pb.key);
    EXPECT_EQ(pb.verdict, p.verdict);
}
