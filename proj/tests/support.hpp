#pragma once

#include "onionchain/crypto.hpp"
#include "onionchain/error.hpp"
#include "onionchain/simnet.hpp"
#include "generators.hpp"

#include <gtest/gtest.h>

namespace onionchain::testing {

inline Bytes ascii(std::string_view s) { return Bytes(s.begin(), s.end()); }

}  // namespace onionchain::testing

// Runs `stmt` and checks it throws onionchain::Error with the given code.
#define EXPECT_ERRC(stmt, errc)                                                      \
    do {                                                                             \
        try {                                                                        \
            stmt;                                                                    \
            ADD_FAILURE() << "expected " #errc;                                      \
        } catch (const ::onionchain::Error& e_) {                                    \
            EXPECT_EQ(e_.code(), ::onionchain::Errc::errc) << e_.what();             \
        }                                                                            \
    } while (0)
