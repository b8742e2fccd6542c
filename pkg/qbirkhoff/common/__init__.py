__all__ = ["constants", "exceptions", "utils", "message"]
