"""
API endpoint modules
""" 