# cython: language_level=3
"""Compiled twins of the kernels in ``_pykernels``; same arithmetic, per-element loops."""

from libc.math cimport exp, sqrt

import numpy as np


def physics_step(double[:, ::1] obj_pos, double[:, ::1] obj_vel, double[::1] obj_angle,
                 double[::1] obj_angvel, double[:, :, ::1] palm_pos, double[:, :, ::1] palm_vel,
                 double[:, ::1] grip, const double[:, :, ::1] accel, const double[:, ::1] grip_target,
                 const double[::1] radius, const double[::1] mass, double dt, double gravity,
                 double v_max, double palm_radius, double spring_k, double damper_k,
                 double grip_gain):
    cdef Py_ssize_t i, p, k
    cdef Py_ssize_t n = obj_pos.shape[0]
    cdef double v, ax, az, dx, dz, fx, fz
    with nogil:
        for i in range(n):
            for p in range(2):
                grip[i, p] += grip_gain * (grip_target[i, p] - grip[i, p])
                for k in range(2):
                    v = palm_vel[i, p, k] + accel[i, p, k] * dt
                    if v > v_max:
                        v = v_max
                    elif v < -v_max:
                        v = -v_max
                    palm_vel[i, p, k] = v
                    palm_pos[i, p, k] += v * dt

            ax = 0.0
            az = ax - gravity
            for p in range(2):
                dx = obj_pos[i, 0] - palm_pos[i, p, 0]
                dz = obj_pos[i, 1] - palm_pos[i, p, 1]
                if sqrt(dx * dx + dz * dz) <= radius[i] + palm_radius and grip[i, p] > 0.5:
                    fx = -spring_k * dx - damper_k * obj_vel[i, 0]
                    fz = -spring_k * dz - damper_k * obj_vel[i, 1]
                    ax = ax + fx / mass[i]
                    az = az + fz / mass[i]

            obj_vel[i, 0] += ax * dt
            obj_vel[i, 1] += az * dt
            obj_pos[i, 0] += obj_vel[i, 0] * dt
            obj_pos[i, 1] += obj_vel[i, 1] * dt
            obj_angle[i] += obj_angvel[i] * dt


def catch_components(const double[:, ::1] obj_pos, const double[:, :, ::1] palm_pos,
                     const double[:, ::1] grip, const double[:, ::1] action,
                     const double[::1] radius, double goal_x, double goal_z,
                     double palm_radius, double[:, ::1] out):
    cdef Py_ssize_t i, p, j
    cdef Py_ssize_t n = obj_pos.shape[0]
    cdef double dx, dz, d, d0, contacts, acc
    with nogil:
        for i in range(n):
            contacts = 0.0
            d0 = 0.0
            for p in range(2):
                dx = obj_pos[i, 0] - palm_pos[i, p, 0]
                dz = obj_pos[i, 1] - palm_pos[i, p, 1]
                d = sqrt(dx * dx + dz * dz)
                if p == 0:
                    d0 = d
                if d <= radius[i] + palm_radius and grip[i, p] > 0.5:
                    contacts = contacts + 1.0
            out[i, 0] = exp(-(0.5 * (d0 + d)))
            dx = obj_pos[i, 0] - goal_x
            dz = obj_pos[i, 1] - goal_z
            out[i, 1] = exp(-sqrt(dx * dx + dz * dz))
            out[i, 2] = 0.5 * contacts
            dx = palm_pos[i, 0, 0] - palm_pos[i, 1, 0]
            dz = palm_pos[i, 0, 1] - palm_pos[i, 1, 1]
            out[i, 3] = 1.0 if sqrt(dx * dx + dz * dz) < 2.0 * palm_radius else 0.0
            acc = 0.0
            for j in range(action.shape[1]):
                acc = acc + action[i, j] * action[i, j]
            out[i, 4] = acc


def gae(const double[::1] rewards, const double[::1] values, const double[::1] dones,
        double gamma, double lam):
    cdef Py_ssize_t n = rewards.shape[0]
    cdef Py_ssize_t t
    cdef double last = 0.0, nonterminal, delta
    adv_arr = np.empty(n)
    cdef double[::1] adv = adv_arr
    with nogil:
        for t in range(n - 1, -1, -1):
            nonterminal = 1.0 - dones[t]
            delta = rewards[t] + gamma * values[t + 1] * nonterminal - values[t]
            last = delta + gamma * lam * nonterminal * last
            adv[t] = last
    return adv_arr
