"""Kitchen-safety decision logic."""


def kitchen_safety(ctx):
    """Alarm once when the stove runs unattended; re-arm once it is safe."""
    stove = ctx.inputs.get("stoveActive")
    occupied = ctx.inputs.get("kitchenOccupied")
    danger = bool(stove) and occupied is False
    if danger and not ctx.state.get("alarmed"):
        ctx.state["alarmed"] = True
        ctx.command("activate")
    elif not danger:
        ctx.state["alarmed"] = False


HANDLERS = {"kitchenSafetyLogic": kitchen_safety}
