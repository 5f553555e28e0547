use super::intent::{ConnectorRequest, CutRequest, Intent, LiftDir, OrderItem, Supply, MAX_ORDER_QTY};
use super::jobs::{schedule, Job};
use super::world::{Clamp, EndRef, Entity, PartStatus, WorldState};
use super::{precondition, Applied, Note, Signal, TaskContext, TaskError};
use crate::config::MenuActionKind;
use crate::geometry::{
    clamp_fit, clamp_zones, compensate_to_wall, connect_transform, end_frame, shift_holding_point, snap_orientation,
    Haptic, JoystickInput, PipeEnd, Pose2, RawPose, Vec2, Vec3, WallPipe,
};
use crate::types::{Diameter, EntityId, Length, Role};

const EPS: f64 = 1e-9;
const MAX_CHAT_CHARS: usize = 500;
const AVATAR_BOUND: f64 = 200.0;

/// Apply one intent atomically: on error the world is left untouched.
pub fn apply_intent(
    world: &mut WorldState,
    ctx: &TaskContext<'_>,
    role: Role,
    intent: &Intent,
) -> Result<Applied, TaskError> {
    let kind = intent.kind();
    if !kind.allowed(role) {
        return Err(TaskError::RoleViolation { role, kind });
    }
    let mut next = world.clone();
    let applied = dispatch(&mut next, ctx, role, intent)?;
    *world = next;
    Ok(applied)
}

fn dispatch(w: &mut WorldState, ctx: &TaskContext<'_>, role: Role, intent: &Intent) -> Result<Applied, TaskError> {
    let mut out = Applied::default();
    match intent {
        Intent::Grab { entity } => grab(w, ctx, role, *entity)?,
        Intent::Release => release(w, ctx, role, &mut out)?,
        Intent::MoveHeld { pose } => move_held(w, role, *pose)?,
        Intent::Joystick { input } => joystick(w, role, *input)?,
        Intent::ApplyGlue { target } => apply_glue(w, ctx, role, *target)?,
        Intent::PlaceClamp {
            pipe,
            zone,
            diameter,
            position,
        } => place_clamp(w, ctx, role, *pipe, *zone, *diameter, *position, &mut out)?,
        Intent::ConnectHeldToEnd { target, held_end } => connect_held(w, ctx, role, *target, *held_end)?,
        Intent::MenuAction { item } => menu_action(w, ctx, role, item, &mut out)?,
        Intent::OrderPipes { items } => order_pipes(w, ctx, items)?,
        Intent::RobotDogJob { cuts, connectors } => robot_dog_job(w, ctx, cuts, connectors)?,
        Intent::Refill { supply } => refill(w, ctx, *supply),
        Intent::LiftControl { dir } => lift_control(w, ctx, role, *dir)?,
        Intent::EnterLift => enter_lift(w, ctx, role)?,
        Intent::ExitLift => exit_lift(w, role)?,
        Intent::MoveAvatar { position } => move_avatar(w, role, *position)?,
        Intent::Chat { text } => {
            let text = text.trim();
            if text.is_empty() || text.chars().count() > MAX_CHAT_CHARS {
                return precondition(format!("chat text must be 1..={MAX_CHAT_CHARS} characters"));
            }
            out.notes.push(Note::Chat {
                role,
                text: text.to_string(),
            });
        }
    }
    Ok(out)
}

fn held(w: &WorldState, role: Role) -> Result<EntityId, TaskError> {
    match w.participant(role).held {
        Some(id) => Ok(id),
        None => precondition("nothing is held"),
    }
}

fn check_reach(w: &WorldState, ctx: &TaskContext<'_>, role: Role, height: f64) -> Result<(), TaskError> {
    let reach = w.reach_top(role, ctx.task.rules.reach_height);
    if height > reach + EPS {
        return Err(TaskError::OutOfReach { height, reach });
    }
    Ok(())
}

fn grab(w: &mut WorldState, ctx: &TaskContext<'_>, role: Role, id: EntityId) -> Result<(), TaskError> {
    if w.participant(role).held.is_some() {
        return precondition("hands are full");
    }
    let part = w.part(id)?;
    match part.status {
        PartStatus::Held { by } => return Err(TaskError::HeldConflict { entity: id, holder: by }),
        PartStatus::Processing => return precondition(format!("{id} is with the robot dog")),
        PartStatus::PartiallyFixed | PartStatus::Fixed => return precondition(format!("{id} is fixed")),
        PartStatus::Storage | PartStatus::OnWallLoose => {}
    }
    let hand = match part.wall_pose {
        Some(pose) if part.status.on_wall() => ctx.wall.embed(&pose),
        _ => RawPose {
            position: Vec3::new(part.ground.x, part.ground.y, 1.0),
            axis: Vec3::new(1.0, 0.0, 0.0),
        },
    };
    let joined = part.joined;
    for other in joined.into_iter().flatten() {
        w.part_mut(other.part)?.joined[other.end.index()] = None;
    }
    let part = w.part_mut(id)?;
    part.status = PartStatus::Held { by: role };
    part.hand = Some(hand);
    part.wall_pose = None;
    part.zones.clear();
    part.glued = [false; 2];
    part.joined = [None; 2];
    let p = w.participant_mut(role);
    p.held = Some(id);
    p.holding_point = Default::default();
    Ok(())
}

fn release(w: &mut WorldState, ctx: &TaskContext<'_>, role: Role, out: &mut Applied) -> Result<(), TaskError> {
    let id = held(w, role)?;
    let part = w.part(id)?.clone();
    let hand = part.hand.expect("held parts carry a hand pose");
    let touching = ctx.wall.distance(hand.position).abs() <= ctx.task.rules.touch_dist;
    if part.is_pipe() && touching {
        let rules = &ctx.task.rules;
        let geometry = part.geometry();
        let raw = compensate_to_wall(&hand, &ctx.wall);
        let snap = snap_orientation(raw.theta, rules.snap_tol_rad());
        let grip = w.participant(role).holding_point;
        let center = raw.translation() + Vec2::from_angle(snap.theta) * grip.center_offset(geometry.length());
        let pose = Pose2::new(center.x, center.y, snap.theta);
        for end in [PipeEnd::A, PipeEnd::B] {
            if end_frame(&geometry, &pose, end).position.y < -EPS {
                return Err(TaskError::OutOfBounds("pipe would sit below the floor".into()));
            }
        }
        let zones = clamp_zones(&WallPipe {
            geometry: &geometry,
            pose,
            diameter: part.diameter,
            on_wall: true,
            joined: None,
        })
        .map_err(|e| TaskError::Precondition(e.to_string()))?;
        let top = zones.iter().map(|z| z.center.y).fold(f64::NEG_INFINITY, f64::max);
        check_reach(w, ctx, role, top)?;
        let p = w.part_mut(id)?;
        p.status = PartStatus::OnWallLoose;
        p.wall_pose = Some(pose);
        p.hand = None;
        p.zones = zones;
        if snap.signal() == Some(Haptic::Long) {
            out.signals.push(Signal::Haptic {
                to: role,
                pulse: Haptic::Long,
            });
        }
    } else {
        let mut p = part;
        p.hand = None;
        w.spawn_in_storage(p, ctx.task);
    }
    w.participant_mut(role).held = None;
    Ok(())
}

fn move_held(w: &mut WorldState, role: Role, pose: RawPose) -> Result<(), TaskError> {
    if !pose.is_finite() || pose.axis.length() < EPS {
        return Err(TaskError::InvalidSpec(
            "pose must be finite with a non-zero axis".into(),
        ));
    }
    let id = held(w, role)?;
    w.part_mut(id)?.hand = Some(pose);
    Ok(())
}

fn joystick(w: &mut WorldState, role: Role, input: JoystickInput) -> Result<(), TaskError> {
    held(w, role)?;
    let p = w.participant_mut(role);
    p.holding_point = shift_holding_point(p.holding_point, input);
    Ok(())
}

fn apply_glue(w: &mut WorldState, ctx: &TaskContext<'_>, role: Role, target: EndRef) -> Result<(), TaskError> {
    let part = w.part(target.part)?;
    if part.status != PartStatus::Fixed {
        return precondition(format!("{} is not fixed; glue goes on fixed parts", target.part));
    }
    if part.joined[target.end.index()].is_some() {
        return precondition("that end is already joined");
    }
    if part.glued[target.end.index()] {
        return precondition("that end is already glued");
    }
    let frame = part.end_frame(target.end).expect("fixed parts have a wall pose");
    check_reach(w, ctx, role, frame.position.y)?;
    if w.meta.glue_charges == 0 {
        return Err(TaskError::NoGlue);
    }
    w.meta.glue_charges -= 1;
    w.part_mut(target.part)?.glued[target.end.index()] = true;
    Ok(())
}

fn connect_held(
    w: &mut WorldState,
    ctx: &TaskContext<'_>,
    role: Role,
    target: EndRef,
    held_end: PipeEnd,
) -> Result<(), TaskError> {
    let id = held(w, role)?;
    if id == target.part {
        return precondition("cannot connect a part to itself");
    }
    let moving = w.part(id)?.clone();
    let fixed = w.part(target.part)?;
    if fixed.status != PartStatus::Fixed {
        return precondition(format!("{} is not fixed", target.part));
    }
    if fixed.joined[target.end.index()].is_some() {
        return precondition("that end is already joined");
    }
    if fixed.diameter != moving.diameter {
        return Err(TaskError::SizeMismatch {
            expected: fixed.diameter,
            got: moving.diameter,
        });
    }
    if !fixed.glued[target.end.index()] {
        return Err(TaskError::NotGlued(target));
    }
    let anchor = fixed.end_frame(target.end).expect("fixed parts have a wall pose");
    check_reach(w, ctx, role, anchor.position.y)?;
    let geometry = moving.geometry();
    let pose = connect_transform(&anchor, &geometry, held_end);
    for end in [PipeEnd::A, PipeEnd::B] {
        if end_frame(&geometry, &pose, end).position.y < -EPS {
            return Err(TaskError::OutOfBounds("part would sit below the floor".into()));
        }
    }
    let zones = if moving.is_pipe() {
        clamp_zones(&WallPipe {
            geometry: &geometry,
            pose,
            diameter: moving.diameter,
            on_wall: true,
            joined: Some(held_end),
        })
        .map_err(|e| TaskError::Precondition(e.to_string()))?
    } else {
        Vec::new()
    };
    let p = w.part_mut(id)?;
    p.wall_pose = Some(pose);
    p.hand = None;
    p.joined[held_end.index()] = Some(target);
    p.status = if p.is_pipe() {
        PartStatus::OnWallLoose
    } else {
        PartStatus::Fixed
    };
    p.zones = zones;
    w.part_mut(target.part)?.joined[target.end.index()] = Some(EndRef {
        part: id,
        end: held_end,
    });
    w.participant_mut(role).held = None;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn place_clamp(
    w: &mut WorldState,
    ctx: &TaskContext<'_>,
    role: Role,
    pipe: EntityId,
    zone: usize,
    diameter: Diameter,
    position: Vec3,
    out: &mut Applied,
) -> Result<(), TaskError> {
    let part = w.part(pipe)?;
    if !matches!(part.status, PartStatus::OnWallLoose | PartStatus::PartiallyFixed) || !part.is_pipe() {
        return precondition(format!("{pipe} is not a loose pipe on the wall"));
    }
    let Some(z) = part.zones.get(zone).copied() else {
        return precondition(format!("{pipe} has no zone {zone}"));
    };
    if z.clamped {
        return precondition("zone is already clamped");
    }
    if w.clamp_stock(diameter) == 0 {
        return precondition(format!("no {diameter} clamps left; ask for a refill"));
    }
    if !position.is_finite() || ctx.wall.distance(position).abs() > ctx.task.rules.touch_dist {
        return precondition("clamp is not against the wall");
    }
    let at = ctx.wall.project(position);
    check_reach(w, ctx, role, at.y)?;
    let fit = clamp_fit(diameter, &z, at, ctx.task.rules.clamp_tol);
    if !fit.fit {
        if diameter != z.diameter {
            return Err(TaskError::SizeMismatch {
                expected: z.diameter,
                got: diameter,
            });
        }
        return precondition("clamp is outside the zone");
    }
    *w.clamp_stock_mut(diameter) -= 1;
    let p = w.part_mut(pipe)?;
    p.zones[zone].clamped = true;
    p.status = if p.zones.iter().all(|z| z.clamped) {
        PartStatus::Fixed
    } else {
        PartStatus::PartiallyFixed
    };
    let id = w.alloc_id();
    w.entities.insert(
        id,
        Entity::Clamp(Clamp {
            id,
            diameter,
            pipe,
            zone,
            at,
        }),
    );
    if let Some(pulse) = fit.signal {
        out.signals.push(Signal::Haptic { to: role, pulse });
    }
    Ok(())
}

fn menu_action(
    w: &mut WorldState,
    ctx: &TaskContext<'_>,
    role: Role,
    item: &str,
    out: &mut Applied,
) -> Result<(), TaskError> {
    let Some(entry) = ctx.menu.item(role, item) else {
        if ctx.menu.item(role.other(), item).is_some() {
            return Err(TaskError::RoleViolation {
                role,
                kind: super::IntentKind::MenuAction,
            });
        }
        return precondition(format!("no menu item `{item}`"));
    };
    match entry.action {
        MenuActionKind::NpcRequest => out.notes.push(Note::NpcRequest {
            role,
            item: entry.id.clone(),
            label: entry.label.clone(),
        }),
        MenuActionKind::OpenDrone | MenuActionKind::OpenRobotDog => out.notes.push(Note::MenuOpened {
            role,
            item: entry.id.clone(),
        }),
        MenuActionKind::RefillGlue => refill(w, ctx, Supply::Glue),
        MenuActionKind::RefillClamp => refill(w, ctx, Supply::Clamp),
    }
    Ok(())
}

fn check_qty(qty: u32) -> Result<(), TaskError> {
    if (1..=MAX_ORDER_QTY).contains(&qty) {
        Ok(())
    } else {
        Err(TaskError::InvalidSpec(format!(
            "qty must be 1..={MAX_ORDER_QTY}, got {qty}"
        )))
    }
}

fn order_pipes(w: &mut WorldState, ctx: &TaskContext<'_>, items: &[OrderItem]) -> Result<(), TaskError> {
    if items.is_empty() {
        return Err(TaskError::InvalidSpec("empty order".into()));
    }
    for it in items {
        check_qty(it.qty)?;
        if it.length == Length::ZERO {
            return Err(TaskError::InvalidSpec("length must be positive".into()));
        }
    }
    let due = w.tick + ctx.seconds_to_ticks(ctx.task.rules.order_delay_s);
    schedule(w, due, Job::Drone { items: items.to_vec() });
    Ok(())
}

fn robot_dog_job(
    w: &mut WorldState,
    ctx: &TaskContext<'_>,
    cuts: &[CutRequest],
    connectors: &[ConnectorRequest],
) -> Result<(), TaskError> {
    if cuts.is_empty() && connectors.is_empty() {
        return Err(TaskError::InvalidSpec("empty robot dog job".into()));
    }
    for (i, c) in cuts.iter().enumerate() {
        if cuts[..i].iter().any(|o| o.pipe == c.pipe) {
            return Err(TaskError::InvalidSpec(format!("{} is cut twice", c.pipe)));
        }
        let part = w.part(c.pipe)?;
        let Some(available) = part.length() else {
            return Err(TaskError::InvalidSpec(format!("{} is not a pipe", c.pipe)));
        };
        if part.status != PartStatus::Storage {
            return precondition(format!("{} is not in storage", c.pipe));
        }
        if c.length == Length::ZERO || c.length > available {
            return Err(TaskError::Length {
                requested: c.length,
                available,
            });
        }
    }
    for c in connectors {
        check_qty(c.qty)?;
    }
    for c in cuts {
        w.part_mut(c.pipe)?.status = PartStatus::Processing;
    }
    let start = w.tick.max(w.meta.robot_dog_busy_until);
    let due = start + ctx.seconds_to_ticks(ctx.task.rules.cut_delay_s);
    w.meta.robot_dog_busy_until = due;
    schedule(
        w,
        due,
        Job::RobotDog {
            cuts: cuts.to_vec(),
            connectors: connectors.to_vec(),
        },
    );
    Ok(())
}

fn refill(w: &mut WorldState, ctx: &TaskContext<'_>, supply: Supply) {
    let rules = &ctx.task.rules;
    match supply {
        Supply::Glue => w.meta.glue_charges += rules.glue_refill,
        Supply::Clamp => {
            for s in &mut w.meta.clamp_stock {
                *s += rules.clamp_refill;
            }
        }
    }
}

fn lift_control(w: &mut WorldState, ctx: &TaskContext<'_>, role: Role, dir: LiftDir) -> Result<(), TaskError> {
    if w.meta.lift.occupant != Some(role) {
        return Err(TaskError::NotInLift);
    }
    let rules = &ctx.task.rules;
    let [lo, hi] = ctx.task.site.wall_span;
    let mut lift = w.meta.lift;
    match dir {
        LiftDir::Left => lift.u -= rules.lift_step,
        LiftDir::Right => lift.u += rules.lift_step,
        LiftDir::Up => lift.height += rules.lift_step,
        LiftDir::Down => lift.height -= rules.lift_step,
    }
    if lift.u < lo - EPS || lift.u > hi + EPS {
        return Err(TaskError::OutOfBounds(format!("lift u must stay within [{lo}, {hi}]")));
    }
    if lift.height < -EPS || lift.height > rules.lift_max_height + EPS {
        return Err(TaskError::OutOfBounds(format!(
            "lift height must stay within [0, {}]",
            rules.lift_max_height
        )));
    }
    w.meta.lift = lift;
    w.participant_mut(role).avatar = Vec2::new(lift.u, ctx.task.site.lift_y);
    Ok(())
}

fn enter_lift(w: &mut WorldState, ctx: &TaskContext<'_>, role: Role) -> Result<(), TaskError> {
    match w.meta.lift.occupant {
        Some(r) if r == role => return precondition("already in the lift"),
        Some(_) => return precondition("the lift is occupied"),
        None => {}
    }
    let platform = Vec2::new(w.meta.lift.u, ctx.task.site.lift_y);
    if w.participant(role).avatar.distance(platform) > ctx.task.rules.lift_proximity + EPS {
        return precondition("too far from the lift");
    }
    w.meta.lift.occupant = Some(role);
    let p = w.participant_mut(role);
    p.in_lift = true;
    p.avatar = platform;
    Ok(())
}

fn exit_lift(w: &mut WorldState, role: Role) -> Result<(), TaskError> {
    if w.meta.lift.occupant != Some(role) {
        return Err(TaskError::NotInLift);
    }
    w.meta.lift.occupant = None;
    w.participant_mut(role).in_lift = false;
    Ok(())
}

fn move_avatar(w: &mut WorldState, role: Role, position: Vec2) -> Result<(), TaskError> {
    if !position.is_finite() || position.x.abs() > AVATAR_BOUND || position.y.abs() > AVATAR_BOUND {
        return Err(TaskError::OutOfBounds(format!(
            "avatar must stay within ±{AVATAR_BOUND}"
        )));
    }
    if w.participant(role).in_lift {
        return precondition("exit the lift first");
    }
    w.participant_mut(role).avatar = position;
    Ok(())
}
