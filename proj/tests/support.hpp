#pragma once

#include <doctest.h>

#include "rplan/error.hpp"

// Runs `expr` and checks that it throws rplan::Error carrying `code`.
#define CHECK_ERROR_CODE(expr, expected)                                                                  \
    do {                                                                                              \
        bool thrown_ = false;                                                                         \
        try {                                                                                         \
            (void)(expr);                                                                             \
        } catch (const rplan::Error& e_) {                                                            \
            thrown_ = true;                                                                           \
            CHECK_MESSAGE(e_.code() == (expected), e_.what());                                            \
        }                                                                                             \
        CHECK_MESSAGE(thrown_, "expected an rplan::Error from " #expr);                               \
    } while (0)
