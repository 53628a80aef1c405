/*
 * symdock.hpp
 *
 * Umbrella header.
 */

#ifndef SYMDOCK_SYMDOCK_HPP_
#define SYMDOCK_SYMDOCK_HPP_

#include "errors.hpp"
#include "vessel.hpp"
#include "scenario.hpp"
#include "abstraction.hpp"
#include "synthesis.hpp"
#include "action_select.hpp"
#include "low_level.hpp"
#include "config.hpp"
#include "closed_loop.hpp"
#include "verify.hpp"
#include "svg.hpp"
#include "service.hpp"

#endif /* SYMDOCK_SYMDOCK_HPP_ */
