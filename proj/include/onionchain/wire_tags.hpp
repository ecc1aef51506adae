#pragma once

#include "onionchain/canonical.hpp"

// Field tags for every canonical structure. Each structure owns a disjoint
// range so bytes encoded as one type never decode as another.
namespace onionchain::tags {

using canonical::Tag;

// registry
inline constexpr Tag kRegPublicKey = 0x70;
inline constexpr Tag kRegIdentity = 0x71;
inline constexpr Tag kRegSignature = 0x72;

// ledger
inline constexpr Tag kTxKind = 0x80;
inline constexpr Tag kTxPayload = 0x81;
inline constexpr Tag kTxSubmitter = 0x82;

inline constexpr Tag kHdrPrev = 0x90;
inline constexpr Tag kHdrMerkle = 0x91;
inline constexpr Tag kHdrHeight = 0x92;
inline constexpr Tag kHdrTimestamp = 0x93;
inline constexpr Tag kHdrSequencer = 0x94;
inline constexpr Tag kHdrSeal = 0x95;

inline constexpr Tag kConflictKey = 0xD0;
inline constexpr Tag kConflictContested = 0xD1;

// onion
inline constexpr Tag kMsgPayload = 0x10;
inline constexpr Tag kMsgTimestamp = 0x11;

inline constexpr Tag kDirFrom = 0x20;
inline constexpr Tag kDirTo = 0x21;

inline constexpr Tag kLayerDirective = 0x30;
inline constexpr Tag kLayerFinal = 0x31;
inline constexpr Tag kLayerInner = 0x32;

inline constexpr Tag kEnvSigner = 0x40;
inline constexpr Tag kEnvBody = 0x41;
inline constexpr Tag kEnvSignature = 0x42;

inline constexpr Tag kLinkKind = 0x50;
inline constexpr Tag kLinkData = 0x51;
inline constexpr Tag kLinkPrev = 0x52;

inline constexpr Tag kEvIndex = 0x60;
inline constexpr Tag kEvCiphertext = 0x61;
inline constexpr Tag kEvPrev = 0x62;

// disclosure
inline constexpr Tag kReqMessageDigest = 0xB0;
inline constexpr Tag kReqTerminal = 0xB1;
inline constexpr Tag kReqKey = 0xB2;
inline constexpr Tag kReqKeyPurpose = 0xB3;
inline constexpr Tag kReqKeyFrom = 0xB4;
inline constexpr Tag kReqKeyTo = 0xB5;

inline constexpr Tag kVoteRequest = 0xA0;
inline constexpr Tag kVoteApprove = 0xA1;
inline constexpr Tag kVoteSignature = 0xA2;

inline constexpr Tag kPleaRequest = 0xC0;
inline constexpr Tag kPleaEvidence = 0xC1;
inline constexpr Tag kPleaPleader = 0xC2;
inline constexpr Tag kPleaKey = 0xC3;
inline constexpr Tag kPleaVerdict = 0xC4;

}  // namespace onionchain::tags
