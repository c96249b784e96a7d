"""Coverage bases and the lifted and Giraud bases"""
