#pragma once

#include <pillow/carpet.hpp>
#include <pillow/energy.hpp>
#include <pillow/error.hpp>
#include <pillow/io.hpp>
#include <pillow/pattern.hpp>
#include <pillow/randomwalk.hpp>
#include <pillow/scaling.hpp>
#include <pillow/trace.hpp>
#include <pillow/verify.hpp>
#include <pillow/words.hpp>
