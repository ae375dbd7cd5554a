#pragma once

#include <doctest.h>

#include <functional>

#include "mse/errors.hpp"

// Runs fn and checks that it throws mse::Error carrying the expected code.
inline void check_error(mse::ErrorCode expected, const std::function<void()>& fn) {
    bool thrown = false;
    try {
        fn();
    } catch (const mse::Error& e) {
        thrown = true;
        CHECK_MESSAGE(e.code() == expected, "got " << e.what());
    }
    CHECK_MESSAGE(thrown, "expected error " << mse::to_string(expected));
}
