"""Numpy implementations of the hot kernels (fallback when the extension is absent).

Operation order mirrors ``_ckernels.pyx`` term by term.
"""

import numpy as np


def physics_step(obj_pos, obj_vel, obj_angle, obj_angvel, palm_pos, palm_vel, grip,
                 accel, grip_target, radius, mass, dt, gravity, v_max, palm_radius,
                 spring_k, damper_k, grip_gain):
    """Advance every environment by one semi-implicit Euler step, in place."""
    grip += grip_gain * (grip_target - grip)

    palm_vel += accel * dt
    np.clip(palm_vel, -v_max, v_max, out=palm_vel)
    palm_pos += palm_vel * dt

    ax = np.zeros(obj_pos.shape[0])
    az = ax - gravity
    for p in range(2):
        dx = obj_pos[:, 0] - palm_pos[:, p, 0]
        dz = obj_pos[:, 1] - palm_pos[:, p, 1]
        held = (np.sqrt(dx * dx + dz * dz) <= radius + palm_radius) & (grip[:, p] > 0.5)
        fx = -spring_k * dx - damper_k * obj_vel[:, 0]
        fz = -spring_k * dz - damper_k * obj_vel[:, 1]
        ax = np.where(held, ax + fx / mass, ax)
        az = np.where(held, az + fz / mass, az)

    obj_vel[:, 0] += ax * dt
    obj_vel[:, 1] += az * dt
    obj_pos += obj_vel * dt
    obj_angle += obj_angvel * dt


def catch_components(obj_pos, palm_pos, grip, action, radius, goal_x, goal_z, palm_radius, out):
    """Columns: hand distance, goal, finger contact, arm contact, action magnitude."""
    dist = []
    contacts = np.zeros(obj_pos.shape[0])
    for p in range(2):
        dx = obj_pos[:, 0] - palm_pos[:, p, 0]
        dz = obj_pos[:, 1] - palm_pos[:, p, 1]
        d = np.sqrt(dx * dx + dz * dz)
        dist.append(d)
        contacts += ((d <= radius + palm_radius) & (grip[:, p] > 0.5)).astype(np.float64)
    out[:, 0] = np.exp(-(0.5 * (dist[0] + dist[1])))
    gx = obj_pos[:, 0] - goal_x
    gz = obj_pos[:, 1] - goal_z
    out[:, 1] = np.exp(-np.sqrt(gx * gx + gz * gz))
    out[:, 2] = 0.5 * contacts
    px = palm_pos[:, 0, 0] - palm_pos[:, 1, 0]
    pz = palm_pos[:, 0, 1] - palm_pos[:, 1, 1]
    out[:, 3] = (np.sqrt(px * px + pz * pz) < 2.0 * palm_radius).astype(np.float64)
    acc = np.zeros(obj_pos.shape[0])
    for j in range(action.shape[1]):
        acc = acc + action[:, j] * action[:, j]
    out[:, 4] = acc


def gae(rewards, values, dones, gamma, lam):
    """Backward GAE recursion; ``values`` carries one bootstrap entry past the end."""
    n = rewards.shape[0]
    adv = np.empty(n)
    last = 0.0
    for t in range(n - 1, -1, -1):
        nonterminal = 1.0 - dones[t]
        delta = rewards[t] + gamma * values[t + 1] * nonterminal - values[t]
        last = delta + gamma * lam * nonterminal * last
        adv[t] = last
    return adv
