#pragma once

#include "doctest.h"

#include "ada/error.hpp"

#define CHECK_ERROR_CODE(expr, expected)                                 \
    do {                                                                 \
        bool thrown_ = false;                                            \
        try {                                                            \
            (void)(expr);                                                \
        } catch (const ::ada::Error& e_) {                               \
            thrown_ = true;                                              \
            CHECK_MESSAGE(e_.code() == (expected), e_.what());           \
        }                                                                \
        CHECK_MESSAGE(thrown_, "expected ::ada::Error from " #expr);     \
    } while (false)
