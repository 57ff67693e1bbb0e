#include "exq/schedule_io.hpp"
#include <doctest.h>
