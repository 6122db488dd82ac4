#include "retrobeam/trajectory.hpp"

#include <algorithm>
#include <cmath>

#include "retrobeam/errors.hpp"

namespace retrobeam {

ChannelTrajectory ChannelTrajectory::fixed(ChannelSnapshot snap) {
    snap.validate();
    ChannelTrajectory traj;
    traj.kind_ = Kind::Static;
    traj.static_snap_ = std::move(snap);
    return traj;
}

ChannelTrajectory ChannelTrajectory::fixed_geometry(ArrayGeometry generator,
                                                    ArrayGeometry receiver, double z0) {
    ChannelTrajectory traj = fixed(synth_channel(generator, receiver, std::nullopt, z0));
    traj.has_geometry_ = true;
    traj.generator_ = std::move(generator);
    traj.receiver_ = std::move(receiver);
    return traj;
}

ChannelTrajectory ChannelTrajectory::revolve(ArrayGeometry generator, ArrayGeometry receiver,
                                             double start_angle, double end_angle,
                                             double duration, double z0) {
    if (!(duration > 0.0)) throw GeometryError("revolve duration must be positive");
    ChannelTrajectory traj;
    traj.kind_ = Kind::Revolve;
    traj.generator_ = std::move(generator);
    traj.receiver_ = std::move(receiver);
    traj.start_angle_ = start_angle;
    traj.end_angle_ = end_angle;
    traj.duration_ = duration;
    traj.z0_ = z0;
    traj.sample(0.0);  // validate geometry and passivity up front
    return traj;
}

ChannelTrajectory ChannelTrajectory::obstruction_transit(ArrayGeometry generator,
                                                         ArrayGeometry receiver,
                                                         Obstruction obstruction, double z0) {
    obstruction.validate();
    ChannelTrajectory traj;
    traj.kind_ = Kind::ObstructionTransit;
    traj.generator_ = std::move(generator);
    traj.receiver_ = std::move(receiver);
    traj.obstruction_ = std::move(obstruction);
    traj.z0_ = z0;
    traj.sample(0.0);
    return traj;
}

ChannelTrajectory ChannelTrajectory::scripted(std::vector<ChannelSnapshot> snapshots) {
    if (snapshots.empty()) throw DimensionError("scripted trajectory needs snapshots");
    if (snapshots.front().timestamp > 0.0) {
        throw DimensionError("scripted trajectory must start at or before t = 0");
    }
    for (std::size_t i = 0; i < snapshots.size(); ++i) {
        snapshots[i].validate();
        if (i > 0 && snapshots[i].timestamp <= snapshots[i - 1].timestamp) {
            throw DimensionError("scripted snapshots must be sorted by timestamp");
        }
        if (snapshots[i].s21.rows() != snapshots[0].s21.rows() ||
            snapshots[i].s21.cols() != snapshots[0].s21.cols()) {
            throw DimensionError("scripted snapshots must share one port layout");
        }
    }
    ChannelTrajectory traj;
    traj.kind_ = Kind::Scripted;
    traj.script_ = std::make_shared<const std::vector<ChannelSnapshot>>(std::move(snapshots));
    return traj;
}

std::optional<InstantGeometry> ChannelTrajectory::geometry_at(double t) const {
    switch (kind_) {
        case Kind::Static:
            if (!has_geometry_) return std::nullopt;  // snapshot only, positions unknown
            return InstantGeometry{generator_, receiver_.centroid()};
        case Kind::Revolve: {
            const double frac = std::clamp(t / duration_, 0.0, 1.0);
            const double angle = start_angle_ + (end_angle_ - start_angle_) * frac;
            return InstantGeometry{generator_.rotated_y(angle, receiver_.centroid()),
                                   receiver_.centroid()};
        }
        case Kind::ObstructionTransit:
            return InstantGeometry{generator_, receiver_.centroid()};
        case Kind::Scripted:
            return std::nullopt;
    }
    return std::nullopt;
}

ChannelSnapshot ChannelTrajectory::sample(double t) const {
    switch (kind_) {
        case Kind::Static: {
            ChannelSnapshot snap = static_snap_;
            snap.timestamp = t;
            return snap;
        }
        case Kind::Revolve: {
            const double frac = std::clamp(t / duration_, 0.0, 1.0);
            const double angle = start_angle_ + (end_angle_ - start_angle_) * frac;
            const ArrayGeometry rotated = generator_.rotated_y(angle, receiver_.centroid());
            return synth_channel(rotated, receiver_, std::nullopt, z0_, t);
        }
        case Kind::ObstructionTransit:
            return synth_channel(generator_, receiver_, obstruction_.at_time(t), z0_, t);
        case Kind::Scripted: {
            const auto& snaps = *script_;
            auto it = std::upper_bound(
                snaps.begin(), snaps.end(), t,
                [](double value, const ChannelSnapshot& s) { return value < s.timestamp; });
            if (it == snaps.begin()) {
                ChannelSnapshot snap = snaps.front();
                snap.timestamp = t;
                return snap;
            }
            ChannelSnapshot snap = *std::prev(it);
            snap.timestamp = t;
            return snap;
        }
    }
    throw NumericalError("unreachable trajectory kind");
}

}  // namespace retrobeam
