#pragma once

#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "retrobeam/channel.hpp"
#include "retrobeam/geometry.hpp"

namespace retrobeam {

// Instantaneous placement of the generator plus the receiver reference point,
// for methods that steer from known positions.
struct InstantGeometry {
    ArrayGeometry generator;
    Vec3 rx_reference;
};

// Time-varying channel. Revolve and obstruction kinds synthesize a fresh
// snapshot per sample and vary continuously in t; scripted trajectories hold
// the last snapshot at or before t.
class ChannelTrajectory {
public:
    enum class Kind { Static, Revolve, ObstructionTransit, Scripted };

    static ChannelTrajectory fixed(ChannelSnapshot snap);
    static ChannelTrajectory fixed_geometry(ArrayGeometry generator, ArrayGeometry receiver,
                                            double z0 = 50.0);
    // Generator rigidly swung about the receiver centroid (axis +y) from
    // start_angle to end_angle (radians, linear in t over `duration`). The
    // base generator geometry is its aligned (angle 0) placement.
    static ChannelTrajectory revolve(ArrayGeometry generator, ArrayGeometry receiver,
                                     double start_angle, double end_angle, double duration,
                                     double z0 = 50.0);
    static ChannelTrajectory obstruction_transit(ArrayGeometry generator, ArrayGeometry receiver,
                                                 Obstruction obstruction, double z0 = 50.0);
    // Snapshots must be sorted by timestamp; the first timestamp must be <= 0.
    static ChannelTrajectory scripted(std::vector<ChannelSnapshot> snapshots);

    ChannelSnapshot sample(double t) const;
    // Unavailable (nullopt) for snapshot-only trajectories.
    std::optional<InstantGeometry> geometry_at(double t) const;
    Kind kind() const { return kind_; }

private:
    ChannelTrajectory() = default;

    Kind kind_ = Kind::Static;
    bool has_geometry_ = false;
    ChannelSnapshot static_snap_;
    ArrayGeometry generator_;
    ArrayGeometry receiver_;
    double z0_ = 50.0;
    double start_angle_ = 0.0;
    double end_angle_ = 0.0;
    double duration_ = 0.0;
    Obstruction obstruction_;
    std::shared_ptr<const std::vector<ChannelSnapshot>> script_;
};

}  // namespace retrobeam
